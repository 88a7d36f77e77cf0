"""Model files.

Float model ('VSFM', little-endian)::

    magic | version u32 | arch id | outputs u16 | variant id | state_dim u16 |
    seed u64 | n_tensors u32 | per tensor: name | ndim u8 | dims u32[ndim] |
    f32 data

QuantModel ('VSFQ') starts like a float model file (the tensors hold every
float parameter and buffer outside the quantized convolutions), followed by
n_convs u32 and per convolution: name | weight scale f64 | input scale f64 |
input zero point i32 | int8 weights.

Strings are a u16 byte length followed by UTF-8 bytes. Architecture ids
refer to registered presets.
"""
import io
import logging
import os
from typing import Union

import numpy as np

from vision_state_fusion import registration
from vision_state_fusion.errors import (BadMagicError, DataFormatError,
                                        TruncatedFileError,
                                        VersionMismatchError)
from vision_state_fusion.nets.bases import FusionVariant
from vision_state_fusion.nets.builder import Model
from vision_state_fusion.nets.quantization import (QuantizedConv2d,
                                                   QuantModel, QuantParams)

logger = logging.getLogger(__name__)

MODEL_MAGIC = b'VSFM'
QUANT_MAGIC = b'VSFQ'
VERSION = 1


class _Writer(object):

    def __init__(self):
        self.buffer = io.BytesIO()

    def scalar(self, value, dtype: str):
        self.buffer.write(np.array(value, dtype=dtype).tobytes())

    def string(self, text: str):
        data = text.encode('utf-8')
        self.scalar(len(data), '<u2')
        self.buffer.write(data)

    def array(self, value: np.ndarray, dtype: str):
        self.buffer.write(np.ascontiguousarray(value, dtype=dtype).tobytes())

    def getvalue(self) -> bytes:
        return self.buffer.getvalue()


class _Reader(object):

    def __init__(self, data: bytes, path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncatedFileError(f'{self.path}: unexpected end of file')
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def scalar(self, dtype: str):
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize), dtype=dt)[0].item()

    def string(self) -> str:
        return self.take(self.scalar('<u2')).decode('utf-8')

    def array(self, shape, dtype: str) -> np.ndarray:
        dt = np.dtype(dtype)
        count = int(np.prod(shape))
        raw = self.take(count * dt.itemsize)
        return np.frombuffer(raw, dtype=dt, count=count).reshape(shape).copy()


def _write_header(w: _Writer, magic: bytes, model: Model) -> None:
    w.buffer.write(magic)
    w.scalar(VERSION, '<u4')
    w.string(model.arch.id)
    w.scalar(model.arch.outputs, '<u2')
    w.string(model.variant.name)
    w.scalar(model.variant.state_dim, '<u2')
    w.scalar(model.seed, '<u8')


def _write_tensors(w: _Writer, tensors: dict) -> None:
    w.scalar(len(tensors), '<u4')
    for name, value in tensors.items():
        w.string(name)
        w.scalar(value.ndim, '<u1')
        w.array(value.shape, '<u4')
        w.array(value, '<f4')


def _read_header(r: _Reader, magic: bytes) -> Model:
    found = r.data[:len(magic)]
    if found != magic:
        raise BadMagicError(f'{r.path}: bad magic {found!r}, expected '
                            f'{magic!r}')
    r.offset = len(magic)
    version = r.scalar('<u4')
    if version != VERSION:
        raise VersionMismatchError(
            f'{r.path}: model version {version} is not supported')
    arch_id = r.string()
    outputs = r.scalar('<u2')
    variant = r.string()
    state_dim = r.scalar('<u2')
    seed = r.scalar('<u8')
    arch = registration.make(arch_id, outputs=outputs)
    return Model(arch, FusionVariant(variant, state_dim), seed=seed)


def _read_tensors(r: _Reader) -> dict:
    tensors = {}
    for _ in range(r.scalar('<u4')):
        name = r.string()
        ndim = r.scalar('<u1')
        shape = tuple(r.array((ndim, ), '<u4'))
        tensors[name] = r.array(shape, '<f4')
    return tensors


def _load_tensors(model: Model, tensors: dict, path) -> None:
    expected = set(model.state_dict())
    if set(tensors) != expected:
        raise DataFormatError(
            f'{path}: tensors {sorted(set(tensors) ^ expected)} do not match '
            f'the architecture')
    model.load_state_dict(tensors)


def save_model(path, model: Union[Model, QuantModel]) -> None:
    w = _Writer()
    if isinstance(model, QuantModel):
        _write_header(w, QUANT_MAGIC, model.model)
        _write_tensors(w, model.model.state_dict())
        convs = model.quantized_convs()
        w.scalar(len(convs), '<u4')
        for name, conv in convs.items():
            w.string(name)
            w.scalar(conv.weight_params.scale, '<f8')
            w.scalar(conv.input_params.scale, '<f8')
            w.scalar(conv.input_params.zero_point, '<i4')
            w.array(conv.qweight, '<i1')
    else:
        _write_header(w, MODEL_MAGIC, model)
        _write_tensors(w, model.state_dict())
    with open(os.fspath(path), 'wb') as f:
        f.write(w.getvalue())
    logger.info('Saved %r to %s', model, path)


def load_model(path) -> Union[Model, QuantModel]:
    """Load a float or quantized model, dispatching on the file magic."""
    with open(os.fspath(path), 'rb') as f:
        data = f.read()
    r = _Reader(data, path)
    if data[:4] == QUANT_MAGIC:
        model = _read_header(r, QUANT_MAGIC)
        tensors = _read_tensors(r)
        backbone = model.sections['backbone']
        convs = {
            l.name: i
            for i, l in enumerate(backbone) if l.kind == 'conv'
        }
        # quantized convolutions carry no float weights
        for name in convs:
            tensors.setdefault(f'{name}.weight',
                               backbone[convs[name]].params['weight'])
        _load_tensors(model, tensors, path)
        for _ in range(r.scalar('<u4')):
            name = r.string()
            if name not in convs:
                raise DataFormatError(f'{path}: unknown convolution {name}')
            template = backbone[convs[name]]
            w_scale = r.scalar('<f8')
            x_scale = r.scalar('<f8')
            zero_point = r.scalar('<i4')
            qweight = r.array(template.param_shapes()['weight'], '<i1')
            backbone[convs[name]] = QuantizedConv2d(
                template, qweight,
                QuantParams(w_scale, 0, -127, 127),
                QuantParams(x_scale, zero_point))
        result = QuantModel(model)
    else:
        model = _read_header(r, MODEL_MAGIC)
        _load_tensors(model, _read_tensors(r), path)
        result = model
    if r.offset != len(data):
        raise DataFormatError(f'{path}: {len(data) - r.offset} trailing bytes')
    logger.info('Loaded %r from %s', result, path)
    return result
