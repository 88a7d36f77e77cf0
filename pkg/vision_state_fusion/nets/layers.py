import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from vision_state_fusion.nets.bases import Layer


def he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype):
    bound = math.sqrt(6. / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2d(Layer):
    """ 2D cross-correlation over NCHW input.

        ``extra_in`` trailing input channels (state planes of the
        double-input variant) are initialized after the regular channels,
        so the regular kernel slices match a network without them.
        ``input_transform`` / ``weight_transform`` hooks are used for
        fake quantization during quantization-aware training.
    """
    kind = 'conv'

    def __init__(self, name, input_shape, out_ch: int, k: int,
                 stride: int = 1, pad: int = 0, bias: bool = False,
                 extra_in: int = 0):
        super().__init__(name, input_shape)
        self.in_ch = input_shape[0]
        self.out_ch = out_ch
        self.k = k
        self.stride = stride
        self.pad = pad
        self.bias = bias
        self.extra_in = extra_in
        _, h, w = input_shape
        self.out_h = (h + 2 * pad - k) // stride + 1
        self.out_w = (w + 2 * pad - k) // stride + 1
        assert self.out_h > 0 and self.out_w > 0, \
            f'{name}: kernel {k} does not fit input {input_shape}'
        self.input_transform = None
        self.weight_transform = None

    @property
    def output_shape(self):
        return (self.out_ch, self.out_h, self.out_w)

    def param_shapes(self):
        shapes = dict(weight=(self.out_ch, self.in_ch, self.k, self.k))
        if self.bias:
            shapes['bias'] = (self.out_ch, )
        return shapes

    def macs(self) -> int:
        return (self.out_h * self.out_w * self.out_ch * self.in_ch *
                self.k * self.k)

    def initialize(self, rng, dtype=np.float32):
        base_in = self.in_ch - self.extra_in
        fan_in = base_in * self.k * self.k
        weight = he_uniform(rng, (self.out_ch, base_in, self.k, self.k),
                            fan_in, dtype)
        if self.extra_in:
            extra = he_uniform(rng,
                               (self.out_ch, self.extra_in, self.k, self.k),
                               fan_in, dtype)
            weight = np.concatenate([weight, extra], axis=1)
        self.params['weight'] = weight
        if self.bias:
            self.params['bias'] = np.zeros(self.out_ch, dtype=dtype)

    def windows(self, x: np.ndarray) -> np.ndarray:
        """View of shape (N, C, out_h, out_w, k, k) on the padded input."""
        p, s = self.pad, self.stride
        if p:
            x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(x, (self.k, self.k), axis=(2, 3))
        return win[:, :, ::s, ::s][:, :, :self.out_h, :self.out_w]

    def correlate(self, x: np.ndarray, weight: np.ndarray) -> np.ndarray:
        win = self.windows(x)
        y = np.tensordot(win, weight, axes=([1, 4, 5], [1, 2, 3]))
        return np.ascontiguousarray(y.transpose(0, 3, 1, 2))

    def forward(self, x, training=False):
        assert x.shape[1:] == self.input_shape, \
            f'{self.name}: expected {self.input_shape}, got {x.shape[1:]}'
        mask = None
        if self.input_transform is not None:
            x, mask = self.input_transform(x)
        weight = self.params['weight']
        if self.weight_transform is not None:
            weight = self.weight_transform(weight)
        y = self.correlate(x, weight)
        if self.bias:
            y += self.params['bias'][None, :, None, None]
        return y, (x, weight, mask)

    def backward(self, grad, cache):
        x, weight, mask = cache
        win = self.windows(x)
        grads = dict(weight=np.tensordot(grad, win,
                                         axes=([0, 2, 3], [0, 2, 3])))
        if self.bias:
            grads['bias'] = grad.sum(axis=(0, 2, 3))
        n, c, h, w = x.shape
        p, s = self.pad, self.stride
        dx = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=grad.dtype)
        rows = s * (self.out_h - 1) + 1
        cols = s * (self.out_w - 1) + 1
        for i in range(self.k):
            for j in range(self.k):
                contrib = np.tensordot(grad, weight[:, :, i, j], axes=([1],
                                                                       [0]))
                dx[:, :, i:i + rows:s, j:j + cols:s] += contrib.transpose(
                    0, 3, 1, 2)
        dx = dx[:, :, p:p + h, p:p + w]
        if mask is not None:
            dx = dx * mask  # straight-through inside the quantization range
        return dx, grads


class BatchNorm2d(Layer):
    """Per-channel batch normalization; inference uses running statistics."""
    kind = 'batchnorm'

    def __init__(self, name, input_shape, momentum: float = 0.1,
                 eps: float = 1e-5):
        super().__init__(name, input_shape)
        self.channels = input_shape[0]
        self.momentum = momentum
        self.eps = eps

    @property
    def output_shape(self):
        return self.input_shape

    def param_shapes(self):
        return dict(gamma=(self.channels, ), beta=(self.channels, ))

    def initialize(self, rng, dtype=np.float32):
        self.params['gamma'] = np.ones(self.channels, dtype=dtype)
        self.params['beta'] = np.zeros(self.channels, dtype=dtype)
        self.buffers['running_mean'] = np.zeros(self.channels, dtype=dtype)
        self.buffers['running_var'] = np.ones(self.channels, dtype=dtype)

    def forward(self, x, training=False):
        gamma = self.params['gamma'][None, :, None, None]
        beta = self.params['beta'][None, :, None, None]
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = x.size // self.channels
            unbiased = var * m / (m - 1) if m > 1 else var
            mom = self.momentum
            self.buffers['running_mean'] = ((1 - mom) *
                                            self.buffers['running_mean'] +
                                            mom * mean).astype(x.dtype)
            self.buffers['running_var'] = ((1 - mom) *
                                           self.buffers['running_var'] +
                                           mom * unbiased).astype(x.dtype)
        else:
            mean = self.buffers['running_mean']
            var = self.buffers['running_var']
        inv_std = 1. / np.sqrt(var + self.eps)
        x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        return gamma * x_hat + beta, (x_hat, inv_std, training)

    def backward(self, grad, cache):
        x_hat, inv_std, training = cache
        grads = dict(gamma=(grad * x_hat).sum(axis=(0, 2, 3)),
                     beta=grad.sum(axis=(0, 2, 3)))
        scale = (self.params['gamma'] * inv_std)[None, :, None, None]
        if not training:
            return grad * scale, grads
        m = grad.size // self.channels
        dx = scale / m * (m * grad - grads['beta'][None, :, None, None] -
                          x_hat * grads['gamma'][None, :, None, None])
        return dx, grads


class ReLU(Layer):
    kind = 'relu'

    @property
    def output_shape(self):
        return self.input_shape

    def forward(self, x, training=False):
        mask = x > 0
        return x * mask, mask

    def backward(self, grad, cache):
        return grad * cache, {}


class MaxPool2d(Layer):
    """Non-overlapping max pooling (kernel == stride)."""
    kind = 'maxpool'

    def __init__(self, name, input_shape, k: int = 2, stride: int = None):
        super().__init__(name, input_shape)
        self.k = k
        self.stride = stride or k
        assert self.stride == k, 'Only non-overlapping pooling is supported'

    @property
    def output_shape(self):
        c, h, w = self.input_shape
        return (c, h // self.k, w // self.k)

    def forward(self, x, training=False):
        n = x.shape[0]
        c, ho, wo = self.output_shape
        k = self.k
        blocks = x[:, :, :ho * k, :wo * k].reshape(n, c, ho, k, wo, k)
        y = blocks.max(axis=(3, 5))
        winners = blocks == y[:, :, :, None, :, None]
        # ties share the gradient
        winners = winners / winners.sum(axis=(3, 5), keepdims=True)
        return y, (x.shape, winners)

    def backward(self, grad, cache):
        shape, winners = cache
        n, c, ho, k, wo, _ = winners.shape
        dx = np.zeros(shape, dtype=grad.dtype)
        dx[:, :, :ho * k, :wo * k] = (
            winners * grad[:, :, :, None, :, None]).reshape(n, c, ho * k,
                                                            wo * k)
        return dx, {}


class Flatten(Layer):
    kind = 'flatten'

    @property
    def output_shape(self):
        return (int(np.prod(self.input_shape)), )

    def forward(self, x, training=False):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, grad, cache):
        return grad.reshape(cache), {}


class Dense(Layer):
    """ Fully connected layer y = x W^T + b with W of shape (out, in).

        As for Conv2d, ``extra_in`` trailing inputs (fused state features)
        get their weight columns drawn after the regular ones.
    """
    kind = 'fc'

    def __init__(self, name, input_shape, units: int, extra_in: int = 0):
        super().__init__(name, input_shape)
        assert len(input_shape) == 1, f'{name}: expects flat input'
        self.in_features = input_shape[0]
        self.units = units
        self.extra_in = extra_in

    @property
    def output_shape(self):
        return (self.units, )

    def param_shapes(self):
        return dict(weight=(self.units, self.in_features),
                    bias=(self.units, ))

    def macs(self) -> int:
        return self.in_features * self.units

    def initialize(self, rng, dtype=np.float32):
        base_in = self.in_features - self.extra_in
        weight = he_uniform(rng, (self.units, base_in), base_in, dtype)
        if self.extra_in:
            extra = he_uniform(rng, (self.units, self.extra_in), base_in,
                               dtype)
            weight = np.concatenate([weight, extra], axis=1)
        self.params['weight'] = weight
        self.params['bias'] = np.zeros(self.units, dtype=dtype)

    def forward(self, x, training=False):
        assert x.shape[1:] == self.input_shape, \
            f'{self.name}: expected {self.input_shape}, got {x.shape[1:]}'
        return x @ self.params['weight'].T + self.params['bias'], x

    def backward(self, grad, cache):
        x = cache
        grads = dict(weight=grad.T @ x, bias=grad.sum(axis=0))
        return grad @ self.params['weight'], grads
