"""Binary dataset container.

Layout (little-endian)::

    header   magic 'VSF1' | version u32 | n_samples u32 |
             height u16 | width u16 | state_dim u16 | label_dim u16 |
             n_groups u16                                      (22 bytes)
    records  n_samples x (image u8[height*width] row-major |
                          state f32[state_dim] | label f32[label_dim] |
                          group_id u16)
"""
import dataclasses
import logging
import os
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from vision_state_fusion.errors import (BadMagicError, DataFormatError,
                                        SchemaMismatchError,
                                        TruncatedFileError,
                                        VersionMismatchError)
from vision_state_fusion.poses import (LABEL_SCHEMAS, STATE_SCHEMAS,
                                       schema_name_for_dim)
from vision_state_fusion.scene.bases import Sample

logger = logging.getLogger(__name__)

MAGIC = b'VSF1'
VERSION = 1

HEADER_DTYPE = np.dtype([('magic', 'S4'), ('version', '<u4'),
                         ('n_samples', '<u4'), ('height', '<u2'),
                         ('width', '<u2'), ('state_dim', '<u2'),
                         ('label_dim', '<u2'), ('n_groups', '<u2')])
HEADER_SIZE = HEADER_DTYPE.itemsize  # 22


def record_dtype(height: int, width: int, state_dim: int,
                 label_dim: int) -> np.dtype:
    return np.dtype([('image', 'u1', (height, width)),
                     ('state', '<f4', (state_dim, )),
                     ('label', '<f4', (label_dim, )), ('group_id', '<u2')])


@dataclasses.dataclass(frozen=True)
class DatasetHeader:
    n_samples: int
    height: int
    width: int
    state_dim: int
    label_dim: int
    n_groups: int
    version: int = VERSION
    magic: bytes = MAGIC

    @property
    def record_size(self) -> int:
        return (self.height * self.width + 4 * self.state_dim +
                4 * self.label_dim + 2)

    @property
    def record_dtype(self) -> np.dtype:
        return record_dtype(self.height, self.width, self.state_dim,
                            self.label_dim)

    def to_bytes(self) -> bytes:
        h = np.zeros(1, dtype=HEADER_DTYPE)
        for name in HEADER_DTYPE.names:
            h[name] = getattr(self, name)
        return h.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> 'DatasetHeader':
        if len(data) >= len(MAGIC) and data[:len(MAGIC)] != MAGIC:
            raise BadMagicError(
                f'Bad magic {bytes(data[:len(MAGIC)])!r}, expected {MAGIC!r}')
        if len(data) < HEADER_SIZE:
            raise TruncatedFileError(
                f'Header needs {HEADER_SIZE} bytes, file has {len(data)}')
        h = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
        if int(h['version']) != VERSION:
            raise VersionMismatchError(
                f'Dataset version {int(h["version"])} is not supported '
                f'(expected {VERSION})')
        return cls(**{
            name: int(h[name])
            for name in HEADER_DTYPE.names if name not in ('magic', 'version')
        })


class Dataset:
    """Column-wise in-memory dataset of (image, state, label, group) rows.

    ``observer_rolls`` holds the true camera roll of freshly rendered
    samples (NaN where unknown); it is kept in memory only.
    """

    def __init__(self,
                 images: np.ndarray,
                 states: np.ndarray,
                 labels: np.ndarray,
                 group_ids: np.ndarray,
                 n_groups: int,
                 observer_rolls: Optional[np.ndarray] = None):
        self.images = np.ascontiguousarray(images, dtype=np.uint8)
        self.states = np.ascontiguousarray(states, dtype=np.float32)
        self.labels = np.ascontiguousarray(labels, dtype=np.float32)
        self.group_ids = np.ascontiguousarray(group_ids, dtype=np.uint16)
        self.n_groups = int(n_groups)
        n = len(self.images)
        if observer_rolls is None:
            observer_rolls = np.full(n, np.nan)
        self.observer_rolls = np.asarray(observer_rolls, dtype=np.float64)
        assert self.images.ndim == 3, f'images must be NxHxW'
        assert self.observer_rolls.shape == (n, )
        assert self.states.ndim == 2 and len(self.states) == n
        assert self.labels.ndim == 2 and len(self.labels) == n
        assert self.group_ids.shape == (n, )
        if n and int(self.group_ids.max()) >= self.n_groups:
            raise DataFormatError(
                f'group_id {int(self.group_ids.max())} >= n_groups='
                f'{self.n_groups}')
        if not np.isfinite(self.labels).all():
            raise DataFormatError('Dataset contains non-finite labels.')

    @classmethod
    def empty(cls, height: int, width: int, state_dim: int, label_dim: int,
              n_groups: int) -> 'Dataset':
        return cls(np.zeros((0, height, width), np.uint8),
                   np.zeros((0, state_dim), np.float32),
                   np.zeros((0, label_dim), np.float32),
                   np.zeros(0, np.uint16), n_groups)

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], n_groups: int,
                     header: DatasetHeader = None) -> 'Dataset':
        samples = list(samples)
        if not samples:
            assert header is not None, 'An empty dataset needs a header'
            return cls.empty(header.height, header.width, header.state_dim,
                             header.label_dim, n_groups)
        return cls(np.stack([s.image for s in samples]),
                   np.stack([s.state for s in samples]),
                   np.stack([s.label for s in samples]),
                   np.array([s.group_id for s in samples]), n_groups,
                   np.array([np.nan if s.observer_roll is None else
                             s.observer_roll for s in samples]))

    @classmethod
    def concatenate(cls, datasets: Sequence['Dataset']) -> 'Dataset':
        assert datasets, 'Nothing to concatenate'
        first = datasets[0]
        for d in datasets[1:]:
            assert d.header_for().record_dtype == first.header_for(
            ).record_dtype, 'Datasets have different layouts'
        return cls(np.concatenate([d.images for d in datasets]),
                   np.concatenate([d.states for d in datasets]),
                   np.concatenate([d.labels for d in datasets]),
                   np.concatenate([d.group_ids for d in datasets]),
                   max(d.n_groups for d in datasets),
                   np.concatenate([d.observer_rolls for d in datasets]))

    def __len__(self) -> int:
        return len(self.images)

    def __getitem__(self, index: int) -> Sample:
        roll = float(self.observer_rolls[index])
        return Sample(self.images[index], self.states[index],
                      self.labels[index], int(self.group_ids[index]),
                      None if np.isnan(roll) else roll)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.n_groups == other.n_groups
                and np.array_equal(self.images, other.images)
                and np.array_equal(self.states, other.states)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.group_ids, other.group_ids))

    def __repr__(self):
        return (f'Dataset(n={len(self)}, image={self.image_shape}, '
                f'state={self.state_schema}, label={self.label_schema}, '
                f'groups={self.n_groups})')

    @property
    def image_shape(self) -> Tuple[int, int]:
        return self.images.shape[1:]

    @property
    def state_dim(self) -> int:
        return self.states.shape[1]

    @property
    def label_dim(self) -> int:
        return self.labels.shape[1]

    @property
    def state_schema(self) -> str:
        return schema_name_for_dim(self.state_dim, STATE_SCHEMAS)

    @property
    def label_schema(self) -> str:
        return schema_name_for_dim(self.label_dim, LABEL_SCHEMAS)

    def header_for(self) -> DatasetHeader:
        height, width = self.image_shape
        return DatasetHeader(n_samples=len(self), height=height, width=width,
                             state_dim=self.state_dim,
                             label_dim=self.label_dim,
                             n_groups=self.n_groups)

    def subset(self, indices) -> 'Dataset':
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.states[indices],
                       self.labels[indices], self.group_ids[indices],
                       self.n_groups, self.observer_rolls[indices])

    def groups(self) -> List[int]:
        """Group ids that occur in the dataset, ascending."""
        return sorted(int(g) for g in np.unique(self.group_ids))

    def indices_of_group(self, group_id: int) -> np.ndarray:
        return np.flatnonzero(self.group_ids == group_id)


def write_dataset(path, dataset: Dataset,
                  header: Optional[DatasetHeader] = None) -> DatasetHeader:
    """Write the header and the records of ``dataset``.

    The header is derived from the samples; a ``header`` passed in must
    describe them, otherwise SchemaMismatchError is raised before anything
    is written.
    """
    expected = dataset.header_for()
    if header is not None and header != expected:
        raise SchemaMismatchError(
            f'Header {header} does not describe the samples ({expected})')
    header = expected
    records = np.zeros(len(dataset), dtype=header.record_dtype)
    records['image'] = dataset.images
    records['state'] = dataset.states
    records['label'] = dataset.labels
    records['group_id'] = dataset.group_ids
    with open(os.fspath(path), 'wb') as f:
        f.write(header.to_bytes())
        f.write(records.tobytes())
    logger.info('Wrote %d samples to %s', len(dataset), path)
    return header


def read_dataset(path) -> Tuple[DatasetHeader, Dataset]:
    with open(os.fspath(path), 'rb') as f:
        data = f.read()
    header = DatasetHeader.from_bytes(data)
    payload = len(data) - HEADER_SIZE
    expected = header.n_samples * header.record_size
    if payload < expected:
        raise TruncatedFileError(
            f'{path}: expected {expected} payload bytes for '
            f'{header.n_samples} samples, found {payload}')
    if payload > expected:
        raise DataFormatError(
            f'{path}: {payload - expected} trailing bytes after the records')
    if header.n_samples == 0:
        return header, Dataset.empty(header.height, header.width,
                                     header.state_dim, header.label_dim,
                                     header.n_groups)
    records = np.frombuffer(data, dtype=header.record_dtype,
                            count=header.n_samples, offset=HEADER_SIZE)
    dataset = Dataset(records['image'].copy(), records['state'].copy(),
                      records['label'].copy(), records['group_id'].copy(),
                      header.n_groups)
    logger.info('Read %d samples from %s', len(dataset), path)
    return header, dataset


def load_dataset(path) -> Dataset:
    return read_dataset(path)[1]


def split_by_fraction(dataset: Dataset,
                      fractions=(0.6, 0.1, 0.3)) -> Tuple[Dataset, ...]:
    """Contiguous split by sample index, e.g. train/val/test = 60/10/30."""
    assert abs(sum(fractions) - 1.) < 1e-9, f'{fractions} must sum to 1'
    bounds = np.rint(np.cumsum(fractions) * len(dataset)).astype(int)
    starts = np.concatenate([[0], bounds[:-1]])
    return tuple(
        dataset.subset(np.arange(a, b)) for a, b in zip(starts, bounds))


def split_by_groups(dataset: Dataset,
                    test_groups: Sequence[int],
                    val_fraction: float = 0.1
                    ) -> Tuple[Dataset, Dataset, Dataset]:
    """Hold out whole groups for testing.

    The remaining samples, in index order, are split into the first
    ``1 - val_fraction`` for training and the rest for validation.
    """
    test_mask = np.isin(dataset.group_ids, np.asarray(test_groups))
    rest = np.flatnonzero(~test_mask)
    n_train = int(round(len(rest) * (1. - val_fraction)))
    return (dataset.subset(rest[:n_train]), dataset.subset(rest[n_train:]),
            dataset.subset(np.flatnonzero(test_mask)))
