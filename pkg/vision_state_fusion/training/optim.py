import collections
import dataclasses
from typing import Dict

import numpy as np


@dataclasses.dataclass
class AdamState:
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray]) -> 'AdamState':
        return cls(
            collections.OrderedDict((k, np.zeros_like(p))
                                    for k, p in params.items()),
            collections.OrderedDict((k, np.zeros_like(p))
                                    for k, p in params.items()))


def adam_step(params: Dict[str, np.ndarray],
              grads: Dict[str, np.ndarray],
              moments: AdamState,
              t: int,
              lr: float = 1e-3,
              weight_decay: float = 0.,
              beta1: float = 0.9,
              beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    """ One bias-corrected Adam update, applied in place to ``params``.

        Weight decay is decoupled (p -= lr * wd * p) and only applied when
        ``weight_decay > 0``.
    """
    assert t >= 1, f'step index t={t} must start at 1'
    c1 = 1. - beta1**t
    c2 = 1. - beta2**t
    for k, p in params.items():
        g = grads[k]
        m = moments.m[k]
        v = moments.v[k]
        m *= beta1
        m += (1. - beta1) * g
        v *= beta2
        v += (1. - beta2) * g * g
        update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        if weight_decay > 0:
            update = update + lr * weight_decay * p
        p -= update.astype(p.dtype)
    moments.t = t
    return moments


class Adam(object):
    """Stateful wrapper that owns the moments of a parameter dict."""

    def __init__(self, params: Dict[str, np.ndarray], lr: float = 1e-3,
                 weight_decay: float = 0.):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.state = AdamState.zeros_like(params)

    def step(self, grads: Dict[str, np.ndarray]) -> None:
        adam_step(self.params, grads, self.state, self.state.t + 1, self.lr,
                  self.weight_decay)
