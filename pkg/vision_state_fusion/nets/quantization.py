""" 8-bit affine quantization of the convolutional backbone.

    Convolution weights use symmetric per-tensor quantization
    (zero point 0, int8 range [-127, 127]); convolution inputs use
    asymmetric per-tensor quantization with min/max calibration
    (range [-128, 127]). Batch normalization, the state MLP branch and the
    head stay in floating point.
"""
import collections
import dataclasses
import logging
from typing import Dict, Tuple

import numpy as np

from vision_state_fusion.nets.builder import Model
from vision_state_fusion.nets.layers import Conv2d

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class QuantParams:
    scale: float
    zero_point: int = 0
    qmin: int = -128
    qmax: int = 127

    def quantize(self, x: np.ndarray) -> np.ndarray:
        q = np.rint(np.asarray(x, dtype=np.float64) / self.scale)
        return np.clip(q + self.zero_point, self.qmin,
                       self.qmax).astype(np.int32)

    def dequantize(self, q: np.ndarray) -> np.ndarray:
        return (np.asarray(q, dtype=np.float64) - self.zero_point) * self.scale

    @property
    def representable_range(self) -> Tuple[float, float]:
        return (float(self.dequantize(self.qmin)),
                float(self.dequantize(self.qmax)))

    def fake_quantize(self, x: np.ndarray):
        """Snap to the grid; the mask marks values inside the range, where
        the straight-through estimator passes gradients."""
        lo, hi = self.representable_range
        mask = ((x >= lo) & (x <= hi)).astype(x.dtype)
        return self.dequantize(self.quantize(x)).astype(x.dtype), mask


def weight_qparams(weight: np.ndarray) -> QuantParams:
    peak = float(np.max(np.abs(weight))) if np.size(weight) else 0.
    scale = peak / 127. if peak > 0 else 1.
    return QuantParams(scale=scale, zero_point=0, qmin=-127, qmax=127)


def activation_qparams(lo: float, hi: float) -> QuantParams:
    """Asymmetric int8 parameters for the range [lo, hi] widened to hold 0.

    A degenerate range (all calibration values zero) falls back to scale 1.
    """
    lo, hi = min(float(lo), 0.), max(float(hi), 0.)
    if not hi - lo > 1e-12:
        return QuantParams(scale=1., zero_point=0)
    scale = (hi - lo) / 255.
    zero_point = int(np.clip(np.rint(-128. - lo / scale), -128, 127))
    return QuantParams(scale=scale, zero_point=zero_point)


def fake_quantize_weight(weight: np.ndarray) -> np.ndarray:
    params = weight_qparams(weight)
    return params.dequantize(params.quantize(weight)).astype(weight.dtype)


def conv_layers(model: Model):
    return [l for l in model.sections['backbone'] if isinstance(l, Conv2d)]


def calibrate(model: Model, images: np.ndarray,
              states: np.ndarray = None) -> Dict[str, Tuple[float, float]]:
    """Min/max of every convolution input over a calibration batch."""
    assert len(images) > 0, 'Calibration batch must not be empty'
    ranges = {}
    convs = conv_layers(model)
    saved = [(c.input_transform, c.weight_transform) for c in convs]

    def recorder(name):

        def record(x):
            lo, hi = ranges.get(name, (np.inf, -np.inf))
            ranges[name] = (min(lo, float(x.min())), max(hi, float(x.max())))
            return x, None

        return record

    try:
        for c in convs:
            c.input_transform = recorder(c.name)
            c.weight_transform = None
        model.predict(images, states)
    finally:
        for c, (inp, w) in zip(convs, saved):
            c.input_transform, c.weight_transform = inp, w
    for name, (lo, hi) in ranges.items():
        logger.debug('Calibrated %s input range [%.4f, %.4f]', name, lo, hi)
    return ranges


def enable_fake_quant(model: Model, ranges: Dict[str, Tuple[float,
                                                             float]]) -> None:
    for c in conv_layers(model):
        c.input_transform = activation_qparams(*ranges[c.name]).fake_quantize
        c.weight_transform = fake_quantize_weight


def disable_fake_quant(model: Model) -> None:
    for c in conv_layers(model):
        c.input_transform = None
        c.weight_transform = None


class QuantizedConv2d(Conv2d):
    """ Inference-only convolution with int8 weights and inputs.

        Products of int8 values are accumulated in float64, which holds the
        integer sums exactly; the accumulator is rescaled to float once.
    """

    def __init__(self, template: Conv2d, qweight: np.ndarray,
                 weight_params: QuantParams, input_params: QuantParams):
        super().__init__(template.name, template.input_shape,
                         template.out_ch, template.k, template.stride,
                         template.pad, template.bias, template.extra_in)
        assert qweight.shape == template.param_shapes()['weight']
        self.qweight = np.asarray(qweight, dtype=np.int8)
        self.weight_params = weight_params
        self.input_params = input_params
        if template.bias:
            self.params['bias'] = template.params['bias'].copy()

    @classmethod
    def from_float(cls, conv: Conv2d,
                   input_params: QuantParams) -> 'QuantizedConv2d':
        weight_params = weight_qparams(conv.params['weight'])
        qweight = weight_params.quantize(conv.params['weight'])
        return cls(conv, qweight, weight_params, input_params)

    def dequantized_weight(self) -> np.ndarray:
        return self.weight_params.dequantize(self.qweight)

    def forward(self, x, training=False):
        xq = self.input_params.quantize(x) - self.input_params.zero_point
        acc = self.correlate(xq.astype(np.float64),
                             self.qweight.astype(np.float64))
        y = acc * (self.input_params.scale * self.weight_params.scale)
        if self.bias:
            y += self.params['bias'][None, :, None, None]
        return y.astype(x.dtype), None

    def backward(self, grad, cache):
        raise NotImplementedError('Quantized layers are inference-only.')


class QuantModel(object):
    """Float model whose backbone convolutions run in int8."""

    def __init__(self, model: Model):
        self.model = model
        self.history = None

    @classmethod
    def from_float(cls, model: Model,
                   ranges: Dict[str, Tuple[float, float]]) -> 'QuantModel':
        qmodel = model.copy()
        disable_fake_quant(qmodel)
        backbone = qmodel.sections['backbone']
        for i, layer in enumerate(backbone):
            if isinstance(layer, Conv2d):
                backbone[i] = QuantizedConv2d.from_float(
                    layer, activation_qparams(*ranges[layer.name]))
        return cls(qmodel)

    @property
    def arch(self):
        return self.model.arch

    @property
    def variant(self):
        return self.model.variant

    @property
    def n_params(self) -> int:
        return self.model.n_params

    def quantized_convs(self) -> Dict[str, QuantizedConv2d]:
        return collections.OrderedDict(
            (l.name, l) for l in self.model.sections['backbone']
            if isinstance(l, QuantizedConv2d))

    def forward(self, x: np.ndarray, state: np.ndarray = None) -> np.ndarray:
        return self.model.forward(x, state, training=False)[0]

    def predict(self, images, states=None, batch_size: int = 256):
        return self.model.predict(images, states, batch_size)

    def __repr__(self):
        return f'QuantModel({self.model!r})'


def quantize(model: Model,
             images: np.ndarray,
             states: np.ndarray = None,
             ranges: Dict[str, Tuple[float, float]] = None) -> QuantModel:
    """Post-training quantization from a calibration batch (or from given
    activation ranges, e.g. the ones fixed during QAT)."""
    if ranges is None:
        ranges = calibrate(model, images, states)
    qmodel = QuantModel.from_float(model, ranges)
    logger.info('Quantized %d convolutions of %r',
                len(qmodel.quantized_convs()), model)
    return qmodel


def q_forward(qmodel: QuantModel, images: np.ndarray,
              states: np.ndarray = None) -> np.ndarray:
    return qmodel.predict(images, states)
