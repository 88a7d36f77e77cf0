import collections
import copy
import logging
from typing import Dict, List, Optional

import numpy as np

from vision_state_fusion.errors import SchemaMismatchError
from vision_state_fusion.nets import layers as layer_module
from vision_state_fusion.nets.bases import ArchSpec, FusionVariant, Layer
from vision_state_fusion.utils import make_rng, stable_key

logger = logging.getLogger(__name__)

LAYER_CLASSES = dict(conv='Conv2d',
                     batchnorm='BatchNorm2d',
                     relu='ReLU',
                     maxpool='MaxPool2d',
                     flatten='Flatten',
                     fc='Dense')

MLP_UNITS = 8
FC_HIDDEN_UNITS = 32

ModelCache = collections.namedtuple(
    'ModelCache', ['backbone', 'mlp', 'head', 'n_features', 'image_channels'])


def make_arch(id: str, input_shape, layers: List[dict],
              outputs: int = 4) -> ArchSpec:
    """Entry point of registered architecture presets; the output layer is
    sized to ``outputs`` (4 for pose4 labels, 7 for pose7)."""
    layers = copy.deepcopy(layers)
    assert layers and layers[-1]['kind'] == 'fc', \
        f'{id}: the last layer must be fc'
    layers[-1]['units'] = outputs
    return ArchSpec(id=id,
                    input_shape=tuple(input_shape),
                    layers=layers,
                    outputs=outputs)


def get_layer_class(kind: str):
    assert kind in LAYER_CLASSES, f'Layer kind={kind} not found.'
    cls_name = LAYER_CLASSES[kind]
    assert hasattr(layer_module, cls_name), f'Class={cls_name} not found.'
    return getattr(layer_module, cls_name)


def create_layer(spec: dict, name: str, input_shape, **extra) -> Layer:
    kwargs = {k: v for k, v in spec.items() if k != 'kind'}
    kwargs.update(extra)
    return get_layer_class(spec['kind'])(name, input_shape, **kwargs)


def build_layers(arch: ArchSpec,
                 variant: FusionVariant) -> Dict[str, List[Layer]]:
    """ Instantiate (without initializing) the layers of an architecture
        wired for a fusion variant.

    Returns
    -------
    Dict with the sections 'backbone', 'mlp' and 'head', each a list of
    layers in forward order.
    """
    s = variant.state_dim
    shape = arch.input_shape
    if variant.name == 'double_input':
        shape = (shape[0] + s, ) + shape[1:]
    counts = collections.Counter()
    backbone = []
    for i, spec in enumerate(arch.backbone_layers):
        counts[spec['kind']] += 1
        name = f'{spec["kind"]}{counts[spec["kind"]]}'
        extra = {}
        if i == 0 and spec['kind'] == 'conv' and variant.name == \
                'double_input':
            extra['extra_in'] = s
        layer = create_layer(spec, name, shape, **extra)
        backbone.append(layer)
        shape = layer.output_shape
    assert variant.name != 'double_input' or \
        backbone[0].kind == 'conv', 'double_input needs a leading conv'
    n_features = shape[0]

    mlp = []
    if variant.name == 'mlp_branch':
        mlp = [
            layer_module.Dense('mlp_fc1', (s, ), MLP_UNITS),
            layer_module.ReLU('mlp_relu1', (MLP_UNITS, )),
            layer_module.Dense('mlp_fc2', (MLP_UNITS, ), MLP_UNITS),
            layer_module.ReLU('mlp_relu2', (MLP_UNITS, ))
        ]

    fused = dict(single_neuron=s, fully_connected=s,
                 mlp_branch=MLP_UNITS).get(variant.name, 0)
    out_spec = arch.head_layers[0]
    if variant.name == 'fully_connected':
        head = [
            layer_module.Dense('fc_hidden', (n_features + fused, ),
                               FC_HIDDEN_UNITS, extra_in=fused),
            layer_module.ReLU('fc_relu', (FC_HIDDEN_UNITS, )),
            create_layer(out_spec, 'fc', (FC_HIDDEN_UNITS, ))
        ]
    else:
        head = [
            create_layer(out_spec, 'fc', (n_features + fused, ),
                         extra_in=fused)
        ]
    return collections.OrderedDict(backbone=backbone, mlp=mlp, head=head)


def preprocess(images: np.ndarray, dtype=np.float32) -> np.ndarray:
    """uint8 (N, H, W) or (N, C, H, W) images -> float (px - 128) / 128."""
    x = np.asarray(images)
    if x.ndim == 3:
        x = x[:, None]
    return ((x.astype(dtype) - 128.) / 128.).astype(dtype)


class Model(object):
    """ Float network: backbone, optional state MLP branch and head.

        Layer parameters are initialized from the stream keyed by
        (seed, layer name), so every variant built with the same seed
        starts from the same backbone weights.
    """

    def __init__(self,
                 arch: ArchSpec,
                 variant: FusionVariant = FusionVariant(),
                 seed: int = 0,
                 dtype=np.float32,
                 debug: bool = False):
        self.arch = arch
        self.variant = variant
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.sections = build_layers(arch, variant)
        for layer in self.layers:
            layer.initialize(make_rng(seed, stable_key(layer.name)),
                             self.dtype)
        if debug:
            describe(self)

    @property
    def layers(self) -> List[Layer]:
        return [layer for sec in self.sections.values() for layer in sec]

    @property
    def n_features(self) -> int:
        return self.sections['backbone'][-1].output_shape[0]

    @property
    def n_params(self) -> int:
        return sum(layer.n_params() for layer in self.layers)

    def parameters(self) -> Dict[str, np.ndarray]:
        """Parameter arrays (not copies) in declaration order."""
        return collections.OrderedDict(
            (f'{layer.name}.{k}', v) for layer in self.layers
            for k, v in layer.params.items())

    def buffers(self) -> Dict[str, np.ndarray]:
        return collections.OrderedDict(
            (f'{layer.name}.{k}', v) for layer in self.layers
            for k, v in layer.buffers.items())

    def state_dict(self) -> Dict[str, np.ndarray]:
        d = collections.OrderedDict(
            (k, v.copy()) for k, v in self.parameters().items())
        d.update((k, v.copy()) for k, v in self.buffers().items())
        return d

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        for layer in self.layers:
            for store in (layer.params, layer.buffers):
                for k in store:
                    value = np.asarray(state[f'{layer.name}.{k}'])
                    assert value.shape == store[k].shape, \
                        f'{layer.name}.{k}: {value.shape} != {store[k].shape}'
                    store[k] = value.astype(self.dtype).copy()

    def copy(self) -> 'Model':
        return copy.deepcopy(self)

    def astype(self, dtype) -> 'Model':
        """Copy of the model with parameters and buffers cast to dtype."""
        model = self.copy()
        model.dtype = np.dtype(dtype)
        for layer in model.layers:
            layer.astype(model.dtype)
        return model

    def _check_inputs(self, x: np.ndarray, state: Optional[np.ndarray]):
        expected = self.arch.input_shape
        if x.ndim != 4 or x.shape[1:] != expected:
            raise SchemaMismatchError(
                f'{self.arch.id}: expected input (N, {expected}), got '
                f'{x.shape}')
        if not self.variant.uses_state:
            return
        if state is None or state.ndim != 2 or \
                state.shape != (len(x), self.variant.state_dim):
            raise SchemaMismatchError(
                f'{self.variant.name}: expected state of shape '
                f'({len(x)}, {self.variant.state_dim}), got '
                f'{None if state is None else state.shape}')

    def forward(self, x: np.ndarray, state: np.ndarray = None,
                training: bool = False):
        """ Batched forward pass.

        Parameters
        ----------
        x: preprocessed images (N, C, H, W)
        state: (N, state_dim) state vectors, ignored by the stateless variant
        training: use batch statistics in batch normalization

        Returns
        -------
        outputs (N, outputs) and the cache needed by backward().
        """
        self._check_inputs(x, state)
        name = self.variant.name
        x = x.astype(self.dtype, copy=False)
        image_channels = x.shape[1]
        if name == 'double_input':
            planes = np.broadcast_to(
                state.astype(self.dtype)[:, :, None, None],
                (len(x), state.shape[1]) + x.shape[2:])
            x = np.concatenate([x, planes], axis=1)
        caches = {}
        h = x
        for sec in ('backbone', 'mlp', 'head'):
            caches[sec] = []
            if sec == 'mlp':
                if not self.sections['mlp']:
                    continue
                features = h
                h = state.astype(self.dtype)
            if sec == 'head':
                if name == 'mlp_branch':
                    h = np.concatenate([features, h], axis=1)
                elif name in ('single_neuron', 'fully_connected'):
                    h = np.concatenate([h, state.astype(self.dtype)], axis=1)
            for layer in self.sections[sec]:
                h, c = layer.forward(h, training)
                caches[sec].append(c)
        return h, ModelCache(caches['backbone'], caches['mlp'], caches['head'],
                             self.n_features, image_channels)

    def _backward_section(self, sec: str, caches, grad, grads):
        for layer, c in zip(reversed(self.sections[sec]), reversed(caches)):
            grad, g = layer.backward(grad, c)
            grads.update((f'{layer.name}.{k}', v) for k, v in g.items())
        return grad

    def backward(self, cache: ModelCache, grad: np.ndarray):
        """ Reverse-mode pass for the outputs of a forward() call.

        Returns
        -------
        (parameter gradients keyed like parameters(), input gradients as a
        dict with 'image' and 'state')
        """
        grads = {}
        name = self.variant.name
        grad = self._backward_section('head', cache.head, grad, grads)
        n_feat = cache.n_features
        d_state = None
        if name == 'mlp_branch':
            d_mlp = grad[:, n_feat:]
            grad = grad[:, :n_feat]
            d_state = self._backward_section('mlp', cache.mlp, d_mlp, grads)
        elif name in ('single_neuron', 'fully_connected'):
            d_state = grad[:, n_feat:]
            grad = grad[:, :n_feat]
        dx = self._backward_section('backbone', cache.backbone, grad, grads)
        if name == 'double_input':
            d_state = dx[:, cache.image_channels:].sum(axis=(2, 3))
            dx = dx[:, :cache.image_channels]
        ordered = collections.OrderedDict(
            (k, grads[k]) for k in self.parameters())
        return ordered, dict(image=dx, state=d_state)

    def predict(self, images: np.ndarray, states: np.ndarray = None,
                batch_size: int = 256) -> np.ndarray:
        """Inference on raw uint8 images (or preprocessed float tensors)."""
        images = np.asarray(images)
        x = preprocess(images, self.dtype) if images.dtype == np.uint8 \
            else images
        if x.ndim == 3:
            x = x[:, None]
        states = None if states is None else np.asarray(states)
        outputs = []
        for i in range(0, len(x), batch_size):
            s = None if states is None else states[i:i + batch_size]
            y, _ = self.forward(x[i:i + batch_size], s, training=False)
            outputs.append(y)
        if not outputs:
            return np.zeros((0, self.arch.outputs), dtype=self.dtype)
        return np.concatenate(outputs)

    def __repr__(self):
        return (f'Model(arch={self.arch.id}, variant={self.variant.name}, '
                f'state_dim={self.variant.state_dim}, params={self.n_params})')


def forward(model: Model, images: np.ndarray, states: np.ndarray = None,
            training: bool = False):
    return model.forward(images, states, training)


def backward(model: Model, cache: ModelCache, output_grad: np.ndarray):
    return model.backward(cache, output_grad)


def describe(model_or_arch, variant: FusionVariant = None) -> str:
    """Print and return a per-layer table of shapes, parameters and MACs."""
    if isinstance(model_or_arch, Model):
        sections = model_or_arch.sections
        title = repr(model_or_arch)
    else:
        sections = build_layers(model_or_arch, variant or FusionVariant())
        title = f'{model_or_arch.id} / {(variant or FusionVariant()).name}'
    rows = [title, f'{"layer":<12} {"output":<16} {"params":>10} '
            f'{"MACs":>12}']
    for sec, layers in sections.items():
        for layer in layers:
            rows.append(f'{layer.name:<12} {str(layer.output_shape):<16} '
                        f'{layer.n_params():>10} {layer.macs():>12}')
    text = '\n'.join(rows)
    print(text)
    return text
