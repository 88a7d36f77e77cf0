#!/usr/bin/env python

import unittest

import numpy as np

import vision_state_fusion as vsf
from common import numerical_gradient, relative_error, tiny_arch
from vision_state_fusion.errors import SchemaMismatchError, UnknownPresetError
from vision_state_fusion.nets import (VARIANTS, FusionVariant, Model,
                                      describe, make_arch, preprocess)


def inputs(n=3, state_dim=1, seed=0, size=8):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 1, size, size))
    state = rng.uniform(-0.3, 0.3, size=(n, state_dim))
    return x, state


class TestModelGradients(unittest.TestCase):

    def check_model(self, variant: str, state_dim: int = 1, seed: int = 0,
                    n: int = 3, size: int = 8):
        model = Model(tiny_arch(input_shape=(1, size, size)),
                      FusionVariant(variant, state_dim), seed=seed,
                      dtype=np.float64)
        x, state = inputs(n=n, state_dim=state_dim, seed=seed, size=size)
        out, cache = model.forward(x, state, training=True)
        r = np.random.default_rng(seed + 100).normal(size=out.shape)

        def loss():
            return float(np.sum(model.forward(x, state, training=True)[0] *
                                r))

        grads, input_grads = model.backward(cache, r)
        self.assertEqual(list(grads), list(model.parameters()))
        for name, p in model.parameters().items():
            err = relative_error(grads[name], numerical_gradient(loss, p))
            self.assertLess(err, 1e-4, f'{variant}: {name}')
        self.assertLess(
            relative_error(input_grads['image'], numerical_gradient(loss, x)),
            1e-4, f'{variant}: image')
        if model.variant.uses_state:
            self.assertLess(
                relative_error(input_grads['state'],
                               numerical_gradient(loss, state)), 1e-4,
                f'{variant}: state')
        else:
            self.assertIsNone(input_grads['state'])

    def test_every_variant(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            size = int(rng.choice((8, 10, 12)))
            n = int(rng.integers(2, 5))
            for variant in VARIANTS:
                self.check_model(variant, seed=seed, n=n, size=size)

    def test_two_state_channels(self):
        for variant in ('single_neuron', 'double_input', 'mlp_branch'):
            self.check_model(variant, state_dim=2)


class TestVariants(unittest.TestCase):

    def setUp(self) -> None:
        self.arch = tiny_arch()
        self.x, self.state = inputs()

    def test_shared_backbone_initialization(self):
        reference = Model(self.arch, FusionVariant('stateless'), seed=4)
        for variant in VARIANTS:
            model = Model(self.arch, FusionVariant(variant), seed=4)
            params = model.parameters()
            for name in ('batchnorm1.gamma', 'batchnorm1.beta'):
                np.testing.assert_array_equal(params[name],
                                              reference.parameters()[name])
            np.testing.assert_array_equal(
                params['conv1.weight'][:, :1],
                reference.parameters()['conv1.weight'])

    def test_seed_changes_initialization(self):
        a = Model(self.arch, seed=0).parameters()['conv1.weight']
        b = Model(self.arch, seed=1).parameters()['conv1.weight']
        self.assertFalse(np.array_equal(a, b))

    def assert_dead_branch(self, variant: str, zero):
        reference = Model(self.arch, FusionVariant('stateless'), seed=2,
                          dtype=np.float64)
        model = Model(self.arch, FusionVariant(variant), seed=2,
                      dtype=np.float64)
        zero(model.parameters())
        expected, _ = reference.forward(self.x)
        actual, _ = model.forward(self.x, self.state)
        np.testing.assert_allclose(actual, expected, atol=1e-12)

    def test_zeroed_state_weights_reproduce_stateless(self):
        n_features = Model(self.arch).n_features

        def zero_fc(params):
            params['fc.weight'][:, n_features:] = 0.

        def zero_plane(params):
            params['conv1.weight'][:, 1:] = 0.

        self.assert_dead_branch('single_neuron', zero_fc)
        self.assert_dead_branch('mlp_branch', zero_fc)
        self.assert_dead_branch('double_input', zero_plane)

    def test_fully_connected_head(self):
        model = Model(self.arch, FusionVariant('fully_connected'))
        names = [layer.name for layer in model.sections['head']]
        self.assertEqual(names, ['fc_hidden', 'fc_relu', 'fc'])
        self.assertEqual(model.sections['head'][0].input_shape,
                         (model.n_features + 1, ))

    def test_state_is_checked(self):
        model = Model(self.arch, FusionVariant('single_neuron'))
        with self.assertRaises(SchemaMismatchError):
            model.forward(self.x)
        with self.assertRaises(SchemaMismatchError):
            model.forward(self.x, np.zeros((3, 2)))
        with self.assertRaises(SchemaMismatchError):
            model.forward(np.zeros((3, 1, 9, 9)), self.state)
        # the stateless network ignores the state entirely
        stateless = Model(self.arch)
        np.testing.assert_array_equal(
            stateless.forward(self.x)[0],
            stateless.forward(self.x, self.state)[0])

    def test_unknown_variant(self):
        with self.assertRaises(UnknownPresetError):
            FusionVariant('late_fusion')
        with self.assertRaises(AssertionError):
            FusionVariant('single_neuron', state_dim=0)


class TestModel(unittest.TestCase):

    def test_preprocess(self):
        images = np.array([[[0, 128, 255]]], dtype=np.uint8)
        np.testing.assert_allclose(preprocess(images)[0, 0, 0],
                                   [-1., 0., 127. / 128.])

    def test_predict_batches(self):
        model = Model(tiny_arch(), FusionVariant('mlp_branch'))
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(5, 8, 8), dtype=np.uint8)
        states = rng.uniform(size=(5, 1)).astype(np.float32)
        full = model.predict(images, states)
        batched = model.predict(images, states, batch_size=2)
        self.assertEqual(full.shape, (5, 4))
        np.testing.assert_allclose(full, batched, rtol=1e-5, atol=1e-6)
        self.assertEqual(model.predict(images[:0], states[:0]).shape, (0, 4))

    def test_state_dict_round_trip(self):
        model = Model(tiny_arch(), seed=1)
        other = Model(tiny_arch(), seed=2)
        other.load_state_dict(model.state_dict())
        x, _ = inputs()
        np.testing.assert_array_equal(model.forward(x)[0],
                                      other.forward(x)[0])

    def test_registered_desknet(self):
        arch = vsf.make('desknet')
        self.assertIn('desknet', vsf.get_arch_list())
        model = Model(arch, FusionVariant('double_input'))
        images = np.zeros((2, 64, 64), dtype=np.uint8)
        out = model.predict(images, np.zeros((2, 1), np.float32))
        self.assertEqual(out.shape, (2, 4))
        self.assertEqual(vsf.make('desknet', outputs=7).outputs, 7)

    def test_describe(self):
        text = describe(Model(tiny_arch(), FusionVariant('mlp_branch')))
        for name in ('conv1', 'batchnorm1', 'mlp_fc1', 'mlp_fc2', 'fc'):
            self.assertIn(name, text)
        text = describe(tiny_arch(), FusionVariant('double_input'))
        self.assertIn('double_input', text)

    def test_make_arch_sizes_the_output_layer(self):
        layers = [dict(kind='flatten'), dict(kind='fc', units=4)]
        arch = make_arch('flat', (1, 2, 2), layers, outputs=7)
        self.assertEqual(arch.layers[-1]['units'], 7)
        self.assertEqual(layers[-1]['units'], 4)


if __name__ == '__main__':
    unittest.main()
