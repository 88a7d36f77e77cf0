#!/usr/bin/env python

import contextlib
import io
import os
import tempfile
import unittest
import xml.etree.ElementTree as ET

from vision_state_fusion.cli.config import (RESOLVED_CONFIG_NAME,
                                            ExperimentConfig, load_config,
                                            parse_overrides, read_config_file)
from vision_state_fusion.cli.main import main
from vision_state_fusion.errors import UsageError
from vision_state_fusion.scene.dataset import read_dataset


def run(argv):
    """Run the CLI and return (exit code, captured stdout)."""
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(['-q'] + list(argv))
    return code, out.getvalue()


class TestConfig(unittest.TestCase):

    def test_defaults_and_overrides(self):
        config = load_config(overrides=[('train.epochs', '7'),
                                        ('scene.x_range', '1.5, 2.5'),
                                        ('train.early_stop_halts', 'no')])
        train = config.train_config()
        self.assertEqual(train.epochs, 7)
        self.assertEqual(train.patience, 7)
        self.assertFalse(train.early_stop_halts)
        self.assertEqual(config.scene_config().x_range, (1.5, 2.5))
        self.assertEqual(config['eval.arch'], 'desknet')

    def test_patience_follows_short_runs(self):
        config = load_config(overrides=[('train.epochs', '3')])
        self.assertEqual(config.train_config().patience, 3)
        self.assertEqual(config['train.patience'], 3)
        config = load_config(overrides=[('train.epochs', '30')])
        self.assertEqual(config.train_config().patience, 15)
        config = load_config(overrides=[('train.epochs', '3'),
                                        ('train.patience', '2')])
        self.assertEqual(config.train_config().patience, 2)

    def test_override_tokens(self):
        pairs = parse_overrides(['--train.epochs', '3', '--scene.seed=4'])
        self.assertEqual(pairs, [('train.epochs', '3'), ('scene.seed', '4')])
        with self.assertRaises(UsageError):
            parse_overrides(['--epochs', '3'])
        with self.assertRaises(UsageError):
            parse_overrides(['--train.epochs'])

    def test_rejects_unknown_keys_and_bad_values(self):
        config = ExperimentConfig()
        with self.assertRaises(UsageError):
            config.set('train.epoch', '3')
        with self.assertRaises(UsageError):
            config.set('train.epochs', 'three')
        with self.assertRaises(UsageError):
            config.set('scene.x_range', '1.0')
        config.set('train.patience', '500')
        with self.assertRaises(UsageError):
            config.train_config()

    def test_preset(self):
        config = load_config(preset='d2d')
        self.assertEqual(config['scene.state_schema'], 'pitch_roll')
        self.assertEqual(config.scene_config().n_groups, 1)
        with self.assertRaises(UsageError):
            load_config(preset='desknet')

    def test_resolved_config_is_a_config_file(self):
        config = load_config(overrides=[('train.epochs', '9'),
                                        ('eval.variants', 'stateless, '
                                         'double_input')])
        with tempfile.TemporaryDirectory() as tmp:
            path = config.write_resolved(tmp)
            pairs = read_config_file(path)
            again = load_config(path)
        self.assertEqual(len(pairs), len(config.resolved()))
        self.assertEqual(again.resolved(), config.resolved())
        self.assertEqual(again.train_config().patience, 9)


class TestCommands(unittest.TestCase):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.dir, *parts)

    def test_usage_errors(self):
        self.assertEqual(run(['gen', '--out', self.path('a.bin'),
                              '--n', '0'])[0], 1)
        self.assertEqual(run(['gen', '--out', self.path('a.bin'), '--n', '2',
                              '--train.epoch', '3'])[0], 1)
        self.assertEqual(run(['eval', '--model', self.path('m.bin'),
                              '--data', self.path('missing.bin'),
                              '--out', self.path('r.csv')])[0], 2)
        self.assertEqual(run(['crossval', '--data', self.path('missing.bin'),
                              '--out-dir', self.path('cv')])[0], 1)
        self.assertEqual(run(['frobnicate'])[0], 1)
        self.assertFalse(os.path.exists(self.path('a.bin')))

    def test_gen_is_reproducible(self):
        for name in ('a', 'b'):
            os.makedirs(self.path(name))
            code, out = run(['gen', '--out', self.path(name, 'data.bin'),
                             '--n', '6', '--seed', '11', '--groups', '3'])
            self.assertEqual(code, 0)
            self.assertIn('Generated 6 samples', out)
            self.assertTrue(os.path.exists(self.path(name,
                                                     RESOLVED_CONFIG_NAME)))
        with open(self.path('a', 'data.bin'), 'rb') as f:
            first = f.read()
        with open(self.path('b', 'data.bin'), 'rb') as f:
            second = f.read()
        self.assertEqual(first, second)
        header, data = read_dataset(self.path('a', 'data.bin'))
        self.assertEqual(header.n_groups, 3)
        self.assertEqual(len(data), 6)
        resolved = dict(read_config_file(self.path('a',
                                                   RESOLVED_CONFIG_NAME)))
        self.assertEqual(resolved['scene.seed'], '11')

    def test_costs(self):
        code, out = run(['costs', '--arch', 'frontnet_sym',
                         '--out', self.path('costs.csv')])
        self.assertEqual(code, 0)
        self.assertIn('MATCH', out)
        self.assertIn('DISCREPANCY', out)
        self.assertTrue(os.path.exists(self.path('costs.csv')))
        self.assertEqual(run(['costs', '--arch', 'd2h'])[0], 1)
        self.assertEqual(run(['costs', '--arch', 'nosuchnet'])[0], 1)

    def test_train_and_eval(self):
        for name, seed in (('train', '1'), ('val', '2')):
            self.assertEqual(run(['gen', '--out', self.path(name + '.bin'),
                                  '--n', '12', '--seed', seed])[0], 0)
        code, out = run(['train', '--data', self.path('train.bin'),
                         '--val', self.path('val.bin'),
                         '--variant', 'single_neuron',
                         '--out', self.path('model.bin'),
                         '--train.epochs', '1', '--train.patience', '1',
                         '--set', 'train.batch_size=4'])
        self.assertEqual(code, 0)
        self.assertTrue(os.path.exists(self.path('model_history.csv')))
        code, out = run(['eval', '--model', self.path('model.bin'),
                         '--data', self.path('val.bin'),
                         '--out', self.path('report.csv')])
        self.assertEqual(code, 0)
        for name in ('x', 'y', 'z', 'phi'):
            self.assertIn(name, out)

    def test_arm_preset_trains_on_pose_states(self):
        for name, seed in (('train', '1'), ('val', '2')):
            self.assertEqual(run(['gen', '--preset', 'a2o',
                                  '--out', self.path(name + '.bin'),
                                  '--n', '12', '--seed', seed])[0], 0)
        header, _ = read_dataset(self.path('train.bin'))
        self.assertEqual((header.state_dim, header.label_dim), (7, 7))
        code, _ = run(['train', '--data', self.path('train.bin'),
                       '--val', self.path('val.bin'),
                       '--variant', 'mlp_branch',
                       '--out', self.path('model.bin'),
                       '--train.epochs', '1', '--train.batch_size', '4'])
        self.assertEqual(code, 0)
        code, out = run(['eval', '--model', self.path('model.bin'),
                         '--data', self.path('val.bin'),
                         '--out', self.path('report.csv')])
        self.assertEqual(code, 0)
        self.assertIn('qw', out)
        self.assertIn('mean rotation error', out)

    def test_report(self):
        scores = self.path('scores.csv')
        with open(scores, 'w') as f:
            f.write('variant,key,output,r2\n')
            for key, (a, b) in enumerate([(0.5, 0.6), (0.4, 0.55),
                                          (0.45, 0.5)]):
                f.write(f'stateless,{key},x,{a}\n')
                f.write(f'mlp_branch,{key},x,{b}\n')
        code, _ = run(['report', '--scores', scores,
                       '--out', self.path('report.svg')])
        self.assertEqual(code, 0)
        root = ET.parse(self.path('report.svg')).getroot()
        self.assertTrue(root.tag.endswith('svg'))

    def test_report_without_rows(self):
        scores = self.path('scores.csv')
        with open(scores, 'w') as f:
            f.write('variant,key,output,r2\n')
        code, _ = run(['report', '--scores', scores,
                       '--out', self.path('report.svg')])
        self.assertEqual(code, 1)
        self.assertFalse(os.path.exists(self.path('report.svg')))


if __name__ == '__main__':
    unittest.main()
