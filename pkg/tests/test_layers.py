#!/usr/bin/env python

import unittest

import numpy as np

from common import numerical_gradient, relative_error
from vision_state_fusion.nets.layers import (BatchNorm2d, Conv2d, Dense,
                                             Flatten, MaxPool2d, ReLU)

TOLERANCE = 1e-4
REPETITIONS = 20


def check_layer(test: unittest.TestCase, layer, input_shape, training=False,
                seed=0):
    """Compare backward() against central differences of sum(y * r)."""
    rng = np.random.default_rng(seed)
    layer.initialize(rng, dtype=np.float64)
    for k, v in layer.params.items():
        layer.params[k] = v + rng.normal(scale=0.1, size=v.shape)
    x = rng.normal(size=(2, ) + tuple(input_shape))
    y, _ = layer.forward(x, training)
    r = rng.normal(size=y.shape)

    def loss():
        return float(np.sum(layer.forward(x, training)[0] * r))

    _, cache = layer.forward(x, training)
    dx, grads = layer.backward(r, cache)
    test.assertLess(relative_error(dx, numerical_gradient(loss, x)),
                    TOLERANCE, f'{layer.name}: input gradient')
    for k, p in layer.params.items():
        test.assertLess(relative_error(grads[k], numerical_gradient(loss, p)),
                        TOLERANCE, f'{layer.name}: gradient of {k}')


class TestShapes(unittest.TestCase):

    def test_conv_output_shape_and_costs(self):
        conv = Conv2d('conv1', (1, 64, 64), out_ch=8, k=5, stride=2, pad=2)
        self.assertEqual(conv.output_shape, (8, 32, 32))
        self.assertEqual(conv.n_params(), 200)
        self.assertEqual(conv.macs(), 204_800)

    def test_dense_costs(self):
        fc = Dense('fc', (2048, ), units=4)
        self.assertEqual(fc.n_params(), 8196)
        self.assertEqual(fc.macs(), 8192)

    def test_free_layers(self):
        for layer in (ReLU('relu', (3, 4, 4)), MaxPool2d('pool', (3, 4, 4)),
                      Flatten('flat', (3, 4, 4))):
            self.assertEqual(layer.n_params(), 0)
            self.assertEqual(layer.macs(), 0)
        bn = BatchNorm2d('bn', (16, 8, 8))
        self.assertEqual(bn.n_params(), 32)
        self.assertEqual(bn.macs(), 0)

    def test_conv_matches_direct_sum(self):
        rng = np.random.default_rng(3)
        conv = Conv2d('conv', (2, 5, 5), out_ch=3, k=3, stride=2, pad=1)
        conv.initialize(rng, dtype=np.float64)
        x = rng.normal(size=(1, 2, 5, 5))
        y, _ = conv.forward(x)
        padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        w = conv.params['weight']
        for o in range(3):
            for i in range(3):
                for j in range(3):
                    patch = padded[0, :, 2 * i:2 * i + 3, 2 * j:2 * j + 3]
                    self.assertAlmostEqual(y[0, o, i, j],
                                           float(np.sum(patch * w[o])))

    def test_extra_inputs_leave_regular_weights_unchanged(self):
        plain = Conv2d('conv1', (1, 8, 8), out_ch=4, k=3)
        fused = Conv2d('conv1', (2, 8, 8), out_ch=4, k=3, extra_in=1)
        plain.initialize(np.random.default_rng(7))
        fused.initialize(np.random.default_rng(7))
        np.testing.assert_array_equal(fused.params['weight'][:, :1],
                                      plain.params['weight'])

    def test_batchnorm_inference_uses_running_statistics(self):
        bn = BatchNorm2d('bn', (2, 3, 3))
        bn.initialize(None, dtype=np.float64)
        x = np.random.default_rng(0).normal(loc=2., size=(4, 2, 3, 3))
        y, _ = bn.forward(x, training=False)
        np.testing.assert_allclose(y, x / np.sqrt(1. + bn.eps))
        bn.forward(x, training=True)
        self.assertTrue(np.all(bn.buffers['running_mean'] > 0.1))


class TestGradients(unittest.TestCase):

    def test_conv(self):
        for seed in range(3):
            check_layer(self, Conv2d('conv', (2, 6, 6), out_ch=3, k=3,
                                     stride=2, pad=1), (2, 6, 6), seed=seed)
        check_layer(self, Conv2d('conv_bias', (1, 5, 5), out_ch=2, k=2,
                                 bias=True), (1, 5, 5))

    def test_batchnorm(self):
        for training in (False, True):
            check_layer(self, BatchNorm2d('bn', (3, 4, 4)), (3, 4, 4),
                        training=training)

    def test_relu_maxpool_flatten(self):
        check_layer(self, ReLU('relu', (2, 4, 4)), (2, 4, 4))
        check_layer(self, MaxPool2d('pool', (2, 5, 4), k=2), (2, 5, 4))
        check_layer(self, Flatten('flat', (2, 3, 3)), (2, 3, 3))

    def test_dense(self):
        check_layer(self, Dense('fc', (7, ), units=3, extra_in=2), (7, ))

    def test_random_shapes(self):
        for seed in range(REPETITIONS):
            rng = np.random.default_rng(seed)
            c, h, w = (int(rng.integers(1, 4)), int(rng.integers(4, 8)),
                       int(rng.integers(4, 8)))
            k, stride, pad = (int(rng.integers(1, 4)), int(rng.integers(1, 3)),
                              int(rng.integers(0, 2)))
            conv = Conv2d('conv', (c, h, w), out_ch=int(rng.integers(1, 4)),
                          k=k, stride=stride, pad=pad, bias=bool(seed % 2))
            check_layer(self, conv, (c, h, w), seed=seed)
            check_layer(self, BatchNorm2d('bn', (c, h, w)), (c, h, w),
                        training=bool(seed % 2), seed=seed)
            check_layer(self, MaxPool2d('pool', (c, h, w), k=2), (c, h, w),
                        seed=seed)
            extra = int(rng.integers(0, 3))
            n = extra + int(rng.integers(2, 8))
            check_layer(self, Dense('fc', (n, ), units=int(rng.integers(1, 5)),
                                    extra_in=extra), (n, ), seed=seed)


if __name__ == '__main__':
    unittest.main()
