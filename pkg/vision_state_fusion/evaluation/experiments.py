""" Paired comparison protocols.

    Every variant is trained from the same seed (same initial backbone
    weights and the same shuffling order) for each key; keys are seeds for
    multi-seed experiments and left-out groups for cross-validation. Scores
    are assembled by key, so the order in which runs finish never matters.
"""
import collections
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vision_state_fusion import registration
from vision_state_fusion.augment.pipeline import AugmentConfig, augment_dataset
from vision_state_fusion.errors import (EmptyGroupError, NumericalError,
                                        UsageError)
from vision_state_fusion.evaluation.metrics import (EvalReport,
                                                    relative_mae_reduction,
                                                    score_outputs)
from vision_state_fusion.evaluation.stats import median_delta, wilcoxon_tails
from vision_state_fusion.nets.bases import ArchSpec, FusionVariant
from vision_state_fusion.nets.builder import Model
from vision_state_fusion.scene.bases import CameraIntrinsics
from vision_state_fusion.scene.dataset import Dataset, split_by_groups
from vision_state_fusion.training.trainer import (TrainConfig,
                                                  check_compatible, train)

logger = logging.getLogger(__name__)


def evaluate(model, test_data: Dataset, seed: Optional[int] = None
             ) -> EvalReport:
    """Score a float or quantized model on every output of ``test_data``."""
    check_compatible(model, test_data)
    predictions = model.predict(test_data.images, test_data.states)
    report = score_outputs(test_data.labels, predictions)
    report.model_id = model.arch.id
    report.variant = model.variant.name
    report.seed = seed
    return report


@dataclasses.dataclass
class DataSplits:
    train: Dataset
    val: Dataset
    test: Dataset


@dataclasses.dataclass
class PairedComparison:
    """ Scores of every (variant, key) run plus paired tests of each variant
        against the reference (first) variant on every output.
    """
    variants: List[str]
    keys: List[int]
    reports: Dict[Tuple[str, int], EvalReport]
    key_name: str = 'seed'
    p_values: Dict[Tuple[str, str], Tuple[float, float]] = \
        dataclasses.field(default_factory=dict)

    @property
    def reference(self) -> str:
        return self.variants[0]

    @property
    def outputs(self) -> List[str]:
        first = self.reports[(self.reference, self.keys[0])]
        return list(first.outputs)

    def r2(self, variant: str, output: str) -> np.ndarray:
        return np.array([
            self.reports[(variant, k)].outputs[output].r2 for k in self.keys
        ])

    def mae(self, variant: str, output: str) -> np.ndarray:
        return np.array([
            self.reports[(variant, k)].outputs[output].mae for k in self.keys
        ])

    def mae_reduction(self, variant: str, output: str):
        """Fraction of the reference's median MAE removed by ``variant``;
        empty when the reference MAE is zero."""
        try:
            return relative_mae_reduction(
                float(np.median(self.mae(self.reference, output))),
                float(np.median(self.mae(variant, output))))
        except NumericalError:
            return ''

    def pairs(self, variant: str, output: str) -> np.ndarray:
        """(reference, variant) R2 pairs in key order."""
        return np.stack([self.r2(self.reference, output),
                         self.r2(variant, output)], axis=1)

    def deltas(self, variant: str, output: str) -> np.ndarray:
        pairs = self.pairs(variant, output)
        return pairs[:, 1] - pairs[:, 0]

    def median(self, variant: str, output: str) -> float:
        return float(np.median(self.r2(variant, output)))

    def median_delta(self, variant: str, output: str) -> float:
        return median_delta(self.pairs(variant, output))

    def run_tests(self) -> None:
        for variant in self.variants[1:]:
            for output in self.outputs:
                p_greater, p_less = wilcoxon_tails(self.deltas(variant, output))
                self.p_values[(variant, output)] = (
                    p_greater, min(1., 2. * min(p_greater, p_less)))

    def summary_rows(self) -> List[dict]:
        rows = []
        for variant in self.variants:
            for output in self.outputs:
                row = dict(variant=variant,
                           reference=self.reference,
                           output=output,
                           n_pairs=len(self.keys),
                           median_r2=self.median(variant, output),
                           median_reference_r2=self.median(
                               self.reference, output),
                           median_delta=self.median_delta(variant, output),
                           mae_reduction=self.mae_reduction(variant, output),
                           p_greater='',
                           p_two_sided='')
                if (variant, output) in self.p_values:
                    row['p_greater'], row['p_two_sided'] = self.p_values[(
                        variant, output)]
                rows.append(row)
        return rows


def resolve_arch(arch, outputs: int = 4) -> ArchSpec:
    if isinstance(arch, str):
        return registration.make(arch, outputs=outputs)
    return arch


def run_variant(arch: ArchSpec, variant: str, splits: DataSplits, seed: int,
                config: TrainConfig) -> EvalReport:
    """Train one variant from ``seed`` and score it on the test split."""
    fusion = FusionVariant(variant, splits.train.state_dim)
    model = Model(arch, fusion, seed=seed)
    run_config = dataclasses.replace(config, seed=seed, log_path=None)
    model, history = train(model, splits.train, splits.val, run_config)
    logger.info('%s seed=%d: best epoch %d of %d', variant, seed,
                history.best_epoch, history.epochs_run)
    return evaluate(model, splits.test, seed=seed)


def _run_all(jobs: int, tasks) -> list:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, *args) for fn, *args in tasks]
            return [f.result() for f in futures]
    return [fn(*args) for fn, *args in tasks]


def _check_variants(variants: Sequence[str]) -> List[str]:
    variants = list(variants)
    if len(variants) < 2:
        raise UsageError(f'Need at least two variants to pair, got '
                         f'{variants}')
    return variants


def paired_experiment(data: DataSplits,
                      variants: Sequence[str] = ('stateless', 'mlp_branch'),
                      n_seeds: int = 5,
                      arch='desknet',
                      config: TrainConfig = TrainConfig(),
                      base_seed: int = 0,
                      jobs: int = 1) -> PairedComparison:
    """Train every variant for seeds base_seed .. base_seed + n_seeds - 1."""
    variants = _check_variants(variants)
    if n_seeds < 2:
        raise UsageError(f'n_seeds={n_seeds} must be at least 2')
    arch = resolve_arch(arch, data.train.label_dim)
    keys = [base_seed + i for i in range(n_seeds)]
    tasks = [(run_variant, arch, v, data, k, config) for k in keys
             for v in variants]
    results = _run_all(jobs, tasks)
    reports = {(t[2], t[4]): r for t, r in zip(tasks, results)}
    comparison = PairedComparison(variants, keys, reports, key_name='seed')
    comparison.run_tests()
    return comparison


def loo_splits(data: Dataset, group: int,
               val_fraction: float = 0.1) -> DataSplits:
    train_data, val_data, test_data = split_by_groups(data, [group],
                                                      val_fraction)
    return DataSplits(train_data, val_data, test_data)


def loo_crossval(data: Dataset,
                 variants: Sequence[str] = ('stateless', 'mlp_branch'),
                 arch='desknet',
                 config: TrainConfig = TrainConfig(),
                 seed: int = 0,
                 val_fraction: float = 0.1,
                 augment: Optional[AugmentConfig] = None,
                 intrinsics: CameraIntrinsics = CameraIntrinsics(),
                 jobs: int = 1) -> PairedComparison:
    """ Leave-one-group-out protocol: each group is the test set once while
        the other groups are split 90/10 by sample index into training and
        validation data. Training splits are augmented after splitting.
    """
    variants = _check_variants(variants)
    if data.n_groups < 3:
        raise UsageError(f'Leave-one-out needs >= 3 groups, got '
                         f'{data.n_groups}')
    for g in range(data.n_groups):
        if len(data.indices_of_group(g)) == 0:
            raise EmptyGroupError(f'Group {g} has no samples')
    arch = resolve_arch(arch, data.label_dim)
    keys = list(range(data.n_groups))
    splits = {}
    for g in keys:
        s = loo_splits(data, g, val_fraction)
        if augment is not None:
            s.train, _ = augment_dataset(s.train, augment, intrinsics)
        splits[g] = s
    tasks = [(run_variant, arch, v, splits[g], seed, config) for g in keys
             for v in variants]
    results = _run_all(jobs, tasks)
    reports = collections.OrderedDict()
    for (g, v), report in zip([(g, v) for g in keys for v in variants],
                              results):
        reports[(v, g)] = report
    comparison = PairedComparison(variants, keys, reports, key_name='group')
    comparison.run_tests()
    return comparison
