#!/usr/bin/env python
"""End-to-end benchmark on the synthetic desk task.

Slow, so opt-in: ``VSF_BENCHMARK=1`` runs a reduced protocol (2000/300/600
samples, 3 seeds, 25 epochs, no augmentation) in a few minutes,
``VSF_BENCHMARK=full`` the complete one (4000/500/1000 samples, 10
augmented copies, 5 seeds, 100 epochs). ``VSF_JOBS`` sets the worker count.
"""
import dataclasses
import os
import unittest

import vision_state_fusion as vsf
from vision_state_fusion.augment import AugmentConfig, augment_dataset
from vision_state_fusion.evaluation import (DataSplits, evaluate,
                                            paired_experiment)
from vision_state_fusion.nets import VARIANTS, FusionVariant, Model
from vision_state_fusion.scene import CameraIntrinsics, generate_dataset
from vision_state_fusion.training import (QATConfig, TrainConfig,
                                          qat_finetune, train)

MODE = os.environ.get('VSF_BENCHMARK', '')
JOBS = int(os.environ.get('VSF_JOBS', '1'))

PROTOCOLS = {
    'reduced': dict(sizes=(2000, 300, 600), copies=0, seeds=3, epochs=25,
                    max_p=0.125),
    'full': dict(sizes=(4000, 500, 1000), copies=10, seeds=5, epochs=100,
                 max_p=0.0625),
}


def make_splits(sizes, copies) -> DataSplits:
    intrinsics = CameraIntrinsics()
    scene = vsf.make('d2h')
    parts = [
        generate_dataset(dataclasses.replace(scene, seed=seed), intrinsics,
                         n=n, jobs=JOBS)
        for seed, n in zip((1, 2, 3), sizes)
    ]
    if copies:
        parts[0], _ = augment_dataset(parts[0],
                                      AugmentConfig(copies=copies, seed=7),
                                      intrinsics, jobs=JOBS)
    return DataSplits(*parts)


@unittest.skipUnless(MODE, 'set VSF_BENCHMARK=1 (or full) to run')
class TestStatefulBenchmark(unittest.TestCase):

    @classmethod
    def setUpClass(cls) -> None:
        cls.protocol = PROTOCOLS['full' if MODE == 'full' else 'reduced']
        cls.splits = make_splits(cls.protocol['sizes'],
                                 cls.protocol['copies'])
        epochs = cls.protocol['epochs']
        cls.config = TrainConfig(epochs=epochs, patience=min(15, epochs))
        cls.comparison = paired_experiment(cls.splits, VARIANTS,
                                           n_seeds=cls.protocol['seeds'],
                                           config=cls.config, jobs=JOBS)
        print()
        for row in cls.comparison.summary_rows():
            print(f'{row["variant"]:<16} {row["output"]:<4} '
                  f'median R2 {row["median_r2"]:.4f} '
                  f'delta {row["median_delta"]:+.4f} p {row["p_greater"]}')

    def test_mlp_branch_improves_height(self):
        c = self.comparison
        self.assertGreaterEqual(c.median_delta('mlp_branch', 'z'), 0.05)
        p_greater, _ = c.p_values[('mlp_branch', 'z')]
        self.assertLessEqual(p_greater, self.protocol['max_p'] + 1e-12)
        for output in ('x', 'y'):
            self.assertGreaterEqual(c.median_delta('mlp_branch', output),
                                    -0.05)

    def test_single_neuron_not_worse_on_height(self):
        c = self.comparison
        self.assertGreaterEqual(c.median('single_neuron', 'z'),
                                c.median('stateless', 'z'))

    def test_quantized_model_keeps_scores(self):
        s = self.splits
        model = Model(vsf.make('desknet'),
                      FusionVariant('mlp_branch', s.train.state_dim), seed=0)
        model, _ = train(model, s.train, s.val, self.config)
        qmodel = qat_finetune(model, s.train, s.val, QATConfig(),
                              batch_size=self.config.batch_size)
        history = qmodel.history
        self.assertLessEqual(history.best_val_loss, history.initial_val_loss)
        float_report = evaluate(model, s.test)
        quant_report = evaluate(qmodel, s.test)
        for name, scores in float_report.outputs.items():
            self.assertLess(abs(quant_report.outputs[name].r2 - scores.r2),
                            0.05, msg=name)


if __name__ == '__main__':
    unittest.main()
