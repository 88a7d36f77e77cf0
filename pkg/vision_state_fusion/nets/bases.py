""" Base classes of the numpy network stack.

    Tensors are NCHW numpy arrays. Layers know their per-sample input shape
    at construction time, so parameter counts and MACs can be computed for
    architectures that are never instantiated (symbolic accounting).
"""
import abc
import dataclasses
from typing import Dict, List, Tuple

import numpy as np

from vision_state_fusion.errors import UnknownPresetError

VARIANTS = ('stateless', 'single_neuron', 'fully_connected', 'double_input',
            'mlp_branch')


@dataclasses.dataclass(frozen=True)
class FusionVariant:
    """How the state vector enters the network."""
    name: str = 'stateless'
    state_dim: int = 1

    def __post_init__(self):
        if self.name not in VARIANTS:
            raise UnknownPresetError(
                f'Variant={self.name} not found. Choose from {VARIANTS}')
        assert self.state_dim >= (0 if self.name == 'stateless' else 1), \
            f'Variant {self.name} needs state_dim >= 1'

    @property
    def uses_state(self) -> bool:
        return self.name != 'stateless'

    @property
    def stateless(self) -> 'FusionVariant':
        return FusionVariant('stateless', self.state_dim)


@dataclasses.dataclass
class ArchSpec:
    """ Declarative layer list of a regression network.

        ``layers`` holds dicts with a ``kind`` key (conv, batchnorm, relu,
        maxpool, flatten, fc) and the layer's keyword arguments. The layers
        after the single flatten form the head; the fusion variant decides
        how the head is wired.
    """
    id: str
    input_shape: Tuple[int, int, int]
    layers: List[dict]
    outputs: int

    def __post_init__(self):
        self.input_shape = tuple(int(v) for v in self.input_shape)
        assert len(self.input_shape) == 3, 'input_shape expects (C, H, W)'
        kinds = [layer['kind'] for layer in self.layers]
        assert kinds.count('flatten') == 1, \
            f'{self.id}: exactly one flatten expected, got {kinds}'
        head = self.head_layers
        assert len(head) == 1 and head[0]['kind'] == 'fc', \
            f'{self.id}: the head must be a single fc layer, got {head}'
        assert head[0]['units'] == self.outputs, \
            f'{self.id}: fc units={head[0]["units"]} != outputs={self.outputs}'

    @property
    def backbone_layers(self) -> List[dict]:
        i = [layer['kind'] for layer in self.layers].index('flatten')
        return self.layers[:i + 1]

    @property
    def head_layers(self) -> List[dict]:
        i = [layer['kind'] for layer in self.layers].index('flatten')
        return self.layers[i + 1:]


class Layer(abc.ABC):
    """ Baseclass for network layers.

        Parameters live in ``params``, non-trained state in ``buffers``.
        ``forward`` returns the output and a cache that ``backward`` consumes.
    """
    kind = None

    def __init__(self, name: str, input_shape: Tuple[int, ...]):
        self.name = name
        self.input_shape = tuple(input_shape)
        self.params: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}

    @property
    @abc.abstractmethod
    def output_shape(self) -> Tuple[int, ...]:
        raise NotImplementedError

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {}

    def n_params(self) -> int:
        return int(sum(np.prod(s) for s in self.param_shapes().values()))

    def macs(self) -> int:
        return 0

    def initialize(self, rng: np.random.Generator, dtype=np.float32) -> None:
        pass

    @abc.abstractmethod
    def forward(self, x: np.ndarray, training: bool = False):
        raise NotImplementedError

    @abc.abstractmethod
    def backward(self, grad: np.ndarray, cache):
        """Returns (input gradient, dict of parameter gradients)."""
        raise NotImplementedError

    def astype(self, dtype) -> None:
        for store in (self.params, self.buffers):
            for k, v in store.items():
                store[k] = v.astype(dtype)

    def __repr__(self):
        return (f'{self.__class__.__name__}({self.name}: {self.input_shape} '
                f'-> {self.output_shape})')
