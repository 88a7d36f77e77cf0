#!/usr/bin/env python

import os
import unittest

import vision_state_fusion as vsf
from common import tiny_arch
from vision_state_fusion.nets import FusionVariant, Model, count_costs
from vision_state_fusion.nets.costs import (cost_table, format_cost_table,
                                            published_deltas)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')


def read_golden(name):
    rows = {}
    with open(os.path.join(DATA_DIR, name)) as f:
        for line in f:
            if line.startswith('#') or not line.strip():
                continue
            layer, params, macs = line.split()
            rows[layer] = (int(params), int(macs))
    return rows


class TestDesknetCosts(unittest.TestCase):

    def test_matches_golden_file(self):
        golden = read_golden('desknet_stateless_costs.txt')
        report = count_costs(vsf.make('desknet'), FusionVariant())
        layers = {name: (params, macs)
                  for name, _, params, macs in report.layers}
        total = golden.pop('total')
        self.assertEqual(layers, golden)
        self.assertEqual((report.total.params, report.total.macs), total)
        self.assertEqual(report.total.bytes, 14268)
        self.assertEqual((report.delta.params, report.delta.macs), (0, 0))

    def test_not_compared_with_published_figures(self):
        for report in cost_table(vsf.make('desknet')):
            self.assertEqual(report.status(), 'UNPUBLISHED')


class TestFrontnetCosts(unittest.TestCase):

    def setUp(self) -> None:
        self.reports = {
            r.variant: r
            for r in cost_table(vsf.make('frontnet_sym'))
        }

    def test_deltas(self):
        expected = dict(stateless=(0, 0),
                        single_neuron=(4, 4),
                        double_input=(800, 3_072_000),
                        mlp_branch=(120, 104),
                        fully_connected=(53_952, 53_920))
        for variant, delta in expected.items():
            r = self.reports[variant]
            self.assertEqual((r.delta.bytes, r.delta.macs), delta, variant)

    def test_status(self):
        self.assertEqual(self.reports['single_neuron'].status(), 'MATCH')
        self.assertEqual(self.reports['double_input'].status(), 'MATCH')
        self.assertEqual(self.reports['mlp_branch'].status(), 'MATCH')
        # the published figure is rounded to ~54k
        self.assertEqual(self.reports['fully_connected'].status(),
                         'DISCREPANCY')
        self.assertEqual(published_deltas()['double_input'], (800, 3_072_000))

    def test_table(self):
        text = format_cost_table(list(self.reports.values()),
                                 compare_published=True)
        print(text)
        self.assertEqual(len(text.splitlines()), 6)
        self.assertIn('MATCH', text)
        self.assertIn('DISCREPANCY', text)
        self.assertIn('~+54000', text)

    def test_state_dim_scales_the_deltas(self):
        arch = vsf.make('frontnet_sym')
        r = count_costs(arch, FusionVariant('single_neuron', state_dim=2))
        self.assertEqual((r.delta.params, r.delta.macs), (8, 8))
        r = count_costs(arch, FusionVariant('double_input', state_dim=2))
        self.assertEqual(r.delta.params, 1600)
        self.assertEqual(r.status(), 'DISCREPANCY')


class TestSymbolicAccounting(unittest.TestCase):

    def test_counts_match_instantiated_model(self):
        for variant in ('stateless', 'fully_connected', 'mlp_branch'):
            v = FusionVariant(variant)
            report = count_costs(tiny_arch(), v)
            model = Model(tiny_arch(), v)
            self.assertEqual(report.total.params, model.n_params)


if __name__ == '__main__':
    unittest.main()
