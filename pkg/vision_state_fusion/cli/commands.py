""" Subcommands of the ``vsf`` harness.

    Each command takes the parsed arguments and the resolved
    ExperimentConfig, writes its outputs plus the config echo and returns
    the process exit status. Errors propagate as VisionStateFusionError and
    are mapped to exit codes by ``main``.
"""
import logging
import os

import numpy as np

from vision_state_fusion import registration
from vision_state_fusion.augment.pipeline import augment_dataset
from vision_state_fusion.cli.config import ExperimentConfig
from vision_state_fusion.cli.plots import write_report_svg
from vision_state_fusion.errors import DataFormatError, UsageError
from vision_state_fusion.evaluation.experiments import (DataSplits, evaluate,
                                                        loo_crossval,
                                                        paired_experiment,
                                                        resolve_arch)
from vision_state_fusion.evaluation.reports import (read_scores_csv,
                                                    write_costs_csv,
                                                    write_report_csv,
                                                    write_scores_csv,
                                                    write_summary_csv)
from vision_state_fusion.nets.bases import VARIANTS, FusionVariant
from vision_state_fusion.nets.builder import Model
from vision_state_fusion.nets.costs import (PUBLISHED_ARCH, cost_table,
                                            format_cost_table)
from vision_state_fusion.nets.serialization import load_model, save_model
from vision_state_fusion.scene.bases import CameraIntrinsics
from vision_state_fusion.scene.builder import SceneBuilder
from vision_state_fusion.scene.dataset import (read_dataset,
                                               split_by_fraction,
                                               write_dataset)
from vision_state_fusion.training.qat import qat_finetune
from vision_state_fusion.training.trainer import train

logger = logging.getLogger(__name__)


def _output_dir(path) -> str:
    return os.path.dirname(os.path.abspath(os.fspath(path)))


def _write_file(writer, path, *args) -> None:
    """Run ``writer(path, *args)`` and map OS failures to format errors."""
    try:
        writer(path, *args)
    except OSError as e:
        raise DataFormatError(f'Cannot write {path}: {e}') from e


def _load(path):
    try:
        return read_dataset(path)[1]
    except FileNotFoundError as e:
        raise UsageError(f'No such dataset: {path}') from e


def _intrinsics_for(dataset) -> CameraIntrinsics:
    height, width = dataset.image_shape
    return CameraIntrinsics.centered(width=width, height=height)


def cmd_gen(args, config: ExperimentConfig) -> int:
    if args.n is None or args.n <= 0:
        raise UsageError(f'--n must be a positive sample count, got {args.n}')
    if args.seed is not None:
        config.set_value('scene.seed', args.seed)
    if args.groups is not None:
        config.set_value('scene.n_groups', args.groups)
    scene = config.scene_config()
    builder = SceneBuilder(scene, CameraIntrinsics(), debug=args.debug)
    dataset = builder.build(args.n, jobs=args.jobs)
    _write_file(write_dataset, args.out, dataset)
    config.write_resolved(_output_dir(args.out))
    print(f'Generated {len(dataset)} samples ({builder.discarded} '
          f'out-of-view draws discarded) -> {args.out}')
    return 0


def cmd_augment(args, config: ExperimentConfig) -> int:
    if args.copies is not None:
        config.set_value('augment.copies', args.copies)
    if args.seed is not None:
        config.set_value('augment.seed', args.seed)
    augment = config.augment_config()
    dataset = _load(args.data)
    augmented, discarded = augment_dataset(dataset, augment,
                                           _intrinsics_for(dataset),
                                           jobs=args.jobs)
    _write_file(write_dataset, args.out, augmented)
    config.write_resolved(_output_dir(args.out))
    print(f'Augmented {len(dataset)} samples into {len(augmented)} copies '
          f'({discarded} discarded) -> {args.out}')
    return 0


def cmd_train(args, config: ExperimentConfig) -> int:
    if args.seed is not None:
        config.set_value('train.seed', args.seed)
    if args.arch is not None:
        config.set_value('eval.arch', args.arch)
    train_data, val_data = _load(args.data), _load(args.val)
    log_path = args.log or os.path.splitext(args.out)[0] + '_history.csv'
    train_config = config.train_config(log_path=log_path)
    arch = resolve_arch(config['eval.arch'], train_data.label_dim)
    variant = FusionVariant(args.variant, train_data.state_dim)
    model = Model(arch, variant, seed=train_config.seed, debug=args.debug)
    try:
        model, history = train(model, train_data, val_data, train_config)
    except OSError as e:
        raise DataFormatError(f'Cannot write {log_path}: {e}') from e
    print(f'Trained {model!r}: best validation L1 '
          f'{history.best_val_loss:.5f} at epoch {history.best_epoch} of '
          f'{history.epochs_run}')
    result = model
    if args.qat:
        result = qat_finetune(model, train_data, val_data,
                              config=train_config.qat,
                              batch_size=train_config.batch_size,
                              seed=train_config.seed)
        if result.history is not None:
            qat_log = os.path.splitext(log_path)[0] + '_qat.csv'
            _write_file(result.history.write_log, qat_log)
            print(f'QAT: best validation L1 '
                  f'{result.history.best_val_loss:.5f} at epoch '
                  f'{result.history.best_epoch}')
    _write_file(save_model, args.out, result)
    config.write_resolved(_output_dir(args.out))
    print(f'Saved {args.out}')
    return 0


def cmd_eval(args, config: ExperimentConfig) -> int:
    model = load_model(args.model)
    data = _load(args.data)
    report = evaluate(model, data)
    _write_file(write_report_csv, args.out, report)
    config.write_resolved(_output_dir(args.out))
    print(f'{"output":<8} {"r2":>9} {"mse":>10} {"mae":>10}')
    for name, scores in report.outputs.items():
        print(f'{name:<8} {scores.r2:>9.4f} {scores.mse:>10.5f} '
              f'{scores.mae:>10.5f}')
    if report.rotation_error_deg is not None:
        print(f'mean rotation error: {report.rotation_error_deg:.2f} deg')
    return 0


def cmd_costs(args, config: ExperimentConfig) -> int:
    if registration.spec(args.arch).kind != 'arch':
        raise UsageError(f'{args.arch} is not an architecture')
    arch = registration.make(args.arch)
    variants = list(VARIANTS) if args.variant == 'all' else [args.variant]
    reports = cost_table(arch, variants, state_dim=args.state_dim)
    print(format_cost_table(reports,
                            compare_published=arch.id == PUBLISHED_ARCH))
    if args.out:
        _write_file(write_costs_csv, args.out, reports)
        config.write_resolved(_output_dir(args.out))
    return 0


def _parse_mode(mode: str):
    if mode == 'loo':
        return 'loo', None
    if mode.startswith('seeds:'):
        try:
            n = int(mode.split(':', 1)[1])
        except ValueError:
            n = 0
        if n >= 2:
            return 'seeds', n
    raise UsageError(f'--mode expects "loo" or "seeds:N" with N >= 2, got '
                     f'{mode!r}')


def cmd_crossval(args, config: ExperimentConfig) -> int:
    mode, n_seeds = _parse_mode(args.mode)
    if args.variants:
        config.set_value('eval.variants', tuple(args.variants))
    if args.arch is not None:
        config.set_value('eval.arch', args.arch)
    train_config = config.train_config()
    augment = config.augment_config() if args.augment else None
    data = _load(args.data)
    intrinsics = _intrinsics_for(data)
    variants = config['eval.variants']
    if mode == 'loo':
        comparison = loo_crossval(data, variants,
                                  arch=config['eval.arch'],
                                  config=train_config,
                                  seed=train_config.seed,
                                  val_fraction=config['eval.val_fraction'],
                                  augment=augment,
                                  intrinsics=intrinsics,
                                  jobs=args.jobs)
    else:
        train_data, val_data, test_data = split_by_fraction(
            data, config['eval.split'])
        if augment is not None:
            train_data, _ = augment_dataset(train_data, augment, intrinsics,
                                            jobs=args.jobs)
        comparison = paired_experiment(DataSplits(train_data, val_data,
                                                  test_data),
                                       variants,
                                       n_seeds=n_seeds,
                                       arch=config['eval.arch'],
                                       config=train_config,
                                       base_seed=config['eval.base_seed'],
                                       jobs=args.jobs)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_file(write_scores_csv, os.path.join(args.out_dir, 'scores.csv'),
                comparison)
    _write_file(write_summary_csv, os.path.join(args.out_dir, 'summary.csv'),
                comparison)
    config.write_resolved(args.out_dir)
    print(f'{"variant":<16} {"output":<6} {"median R2":>10} '
          f'{"delta":>9} {"p(>)":>8}')
    for row in comparison.summary_rows():
        p = row['p_greater']
        p = f'{p:>8.5f}' if p != '' else f'{"-":>8}'
        print(f'{row["variant"]:<16} {row["output"]:<6} '
              f'{row["median_r2"]:>10.4f} {row["median_delta"]:>+9.4f} {p}')
    return 0


def cmd_report(args, config: ExperimentConfig) -> int:
    rows = read_scores_csv(args.scores)
    if not np.all([np.isfinite(r['r2']) for r in rows]):
        raise DataFormatError(f'{args.scores}: non-finite R2 values')
    _write_file(write_report_svg, args.out, rows)
    print(f'Wrote {args.out}')
    return 0
