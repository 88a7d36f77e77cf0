""" Base types of the synthetic desk-scale world.

    The scene stands in for a drone observing a subject: an observer camera
    with pitch/roll/yaw, a camera-facing billboard as the subject and a
    low-contrast checkerboard ground under a uniform sky.
"""
import dataclasses
import math
from typing import Optional, Tuple

import numpy as np

from vision_state_fusion.poses import LABEL_SCHEMAS, STATE_SCHEMAS

# the synthetic pitch augmentation envelope; scene pitch stays inside it
MAX_PITCH_DEG = 17.0


def _check_range(name: str, value: Tuple[float, float]) -> None:
    assert len(value) == 2, f'{name} expects (min, max)'
    assert value[0] <= value[1], f'{name}: min={value[0]} > max={value[1]}'


@dataclasses.dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels; pixel centers sit on integer indices.

    The default principal point is the geometric image center, so mirroring
    the columns of an image mirrors the camera rays exactly.
    """
    f: float = 64.0
    cx: float = 31.5
    cy: float = 31.5
    width: int = 64
    height: int = 64

    def __post_init__(self):
        assert self.f > 0, f'f={self.f} must be positive'
        assert 0 <= self.cx < self.width, f'cx={self.cx} outside image'
        assert 0 <= self.cy < self.height, f'cy={self.cy} outside image'

    @classmethod
    def centered(cls, width: int = 64, height: int = 64, f: float = 64.0):
        return cls(f=f, cx=(width - 1) / 2., cy=(height - 1) / 2.,
                   width=width, height=height)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.f, 0., self.cx], [0., self.f, self.cy],
                         [0., 0., 1.]])


@dataclasses.dataclass(frozen=True)
class SceneConfig:
    """Sampling ranges of the synthetic world.

    Target ranges are relative to the observer's base frame (meters,
    radians); observer pitch/roll ranges and the lean of the target
    (``target_roll_range_deg``, off by default) are in degrees.
    """
    x_range: Tuple[float, float] = (1.0, 3.0)
    y_range: Tuple[float, float] = (-1.0, 1.0)
    z_range: Tuple[float, float] = (-0.5, 0.5)
    phi_range: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    pitch_range_deg: Tuple[float, float] = (-17.0, 17.0)
    roll_range_deg: Tuple[float, float] = (-5.0, 5.0)
    target_roll_range_deg: Tuple[float, float] = (0.0, 0.0)
    observer_altitude: Tuple[float, float] = (-0.25, 0.25)
    world_extent: float = 5.0
    ground_z: float = -1.5
    checker_period: float = 0.5
    billboard_size: Tuple[float, float] = (0.45, 1.7)
    seed: int = 1
    n_groups: int = 17
    state_schema: str = 'pitch'
    label_schema: str = 'pose4'
    max_attempts: int = 100

    def __post_init__(self):
        for name in ('x_range', 'y_range', 'z_range', 'phi_range',
                     'pitch_range_deg', 'roll_range_deg',
                     'target_roll_range_deg', 'observer_altitude'):
            _check_range(name, getattr(self, name))
        lo, hi = self.pitch_range_deg
        assert -MAX_PITCH_DEG <= lo and hi <= MAX_PITCH_DEG, \
            f'pitch range {self.pitch_range_deg} exceeds +-{MAX_PITCH_DEG} deg'
        assert self.x_range[0] > 0, 'targets must lie in front of the observer'
        assert self.checker_period > 0
        assert self.n_groups >= 1
        assert 0 <= self.seed < 2**64, 'seed must be a 64-bit unsigned integer'
        assert self.state_schema in STATE_SCHEMAS, \
            f'Unsupported state schema: {self.state_schema}'
        assert self.label_schema in LABEL_SCHEMAS, \
            f'Unsupported label schema: {self.label_schema}'
        assert self.max_attempts >= 1

    @property
    def state_dim(self) -> int:
        return len(STATE_SCHEMAS[self.state_schema])

    @property
    def label_dim(self) -> int:
        return len(LABEL_SCHEMAS[self.label_schema])


@dataclasses.dataclass(eq=False)
class Sample:
    """One camera frame with the observer state and the target label.

    ``observer_roll`` is the true roll of the camera when the sample was
    rendered in this process; it is not part of the file format.
    """
    image: np.ndarray
    state: np.ndarray
    label: np.ndarray
    group_id: int
    observer_roll: Optional[float] = None

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.uint8)
        self.state = np.asarray(self.state, dtype=np.float32)
        self.label = np.asarray(self.label, dtype=np.float32)
        self.group_id = int(self.group_id)
        if self.observer_roll is not None:
            self.observer_roll = float(self.observer_roll)
        assert self.image.ndim == 2, f'image must be HxW, got {self.image.shape}'
        assert np.isfinite(self.label).all(), 'label must be finite'

    def replace(self, **changes) -> 'Sample':
        fields = dict(image=self.image, state=self.state, label=self.label,
                      group_id=self.group_id, observer_roll=self.observer_roll)
        fields.update(changes)
        return Sample(**fields)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (self.group_id == other.group_id
                and np.array_equal(self.image, other.image)
                and np.array_equal(self.state, other.state)
                and np.array_equal(self.label, other.label))
