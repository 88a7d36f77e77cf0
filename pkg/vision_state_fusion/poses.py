"""Reference frames, unit quaternions and relative-pose labels.

Conventions
-----------
* Quaternions are scalar-last ``(x, y, z, w)``, the layout PyBullet uses.
* Euler angles are intrinsic yaw-pitch-roll (Z-Y-X). With the world z-axis
  pointing up, a positive pitch turns the nose (and the camera) down.
* The *base frame* of a robot shares its position and yaw but has roll and
  pitch set to zero, so its z-axis is always the world z-axis. Labels are
  expressed in this frame and are therefore invariant to camera tilt.
"""
import dataclasses
import math
import sys
from typing import Sequence, Tuple

import numpy as np

from vision_state_fusion.errors import NumericalError
from vision_state_fusion.utils import RedirectStream

with RedirectStream(sys.stderr):
    import pybullet as pb

ANGLE_CHANNELS = ('roll', 'pitch', 'yaw')

STATE_SCHEMAS = {
    'pitch': ('pitch', ),
    'pitch_roll': ('pitch', 'roll'),
    'pose': ('x', 'y', 'z', 'qx', 'qy', 'qz', 'qw'),
}

LABEL_SCHEMAS = {
    'pose4': ('x', 'y', 'z', 'phi'),
    'pose7': ('x', 'y', 'z', 'qx', 'qy', 'qz', 'qw'),
}


@dataclasses.dataclass(frozen=True)
class Quaternion:
    """Unit quaternion; normalized on construction."""
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    w: float = 1.0

    def __post_init__(self):
        q = np.array([self.x, self.y, self.z, self.w], dtype=np.float64)
        if not np.isfinite(q).all():
            raise NumericalError(f'Non-finite quaternion: {q}')
        norm = math.sqrt(float(q @ q))
        if norm < 1e-12:
            raise NumericalError('Cannot normalize a zero-norm quaternion.')
        for name, value in zip('xyzw', q / norm):
            object.__setattr__(self, name, float(value))

    @classmethod
    def identity(cls) -> 'Quaternion':
        return cls(0., 0., 0., 1.)

    @classmethod
    def from_array(cls, q: Sequence[float]) -> 'Quaternion':
        assert len(q) == 4, f'Expected 4 components, got {len(q)}'
        return cls(*(float(v) for v in q))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.z, self.w)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def __neg__(self) -> 'Quaternion':
        return Quaternion(-self.x, -self.y, -self.z, -self.w)


@dataclasses.dataclass(frozen=True)
class Pose:
    position: Tuple[float, float, float] = (0., 0., 0.)
    orientation: Quaternion = Quaternion()

    def __post_init__(self):
        assert len(self.position) == 3, 'position expects (x, y, z)'
        object.__setattr__(self, 'position',
                           tuple(float(v) for v in self.position))

    @classmethod
    def from_euler(cls, position, roll=0., pitch=0., yaw=0.) -> 'Pose':
        return cls(tuple(position), quat_from_euler(roll, pitch, yaw))

    @property
    def position_array(self) -> np.ndarray:
        return np.array(self.position)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.position_array).all())

    def euler(self) -> Tuple[float, float, float]:
        """Returns (roll, pitch, yaw) in radians."""
        return quat_to_euler(self.orientation)


@dataclasses.dataclass(frozen=True)
class RobotState:
    """State estimate fed to a stateful network, e.g. ``[pitch]``."""
    values: Tuple[float, ...]
    schema: Tuple[str, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        schema = tuple(self.schema)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'schema', schema)
        assert len(values) == len(schema), \
            f'{len(values)} values for schema {schema}'
        for name, v in zip(schema, values):
            if name in ANGLE_CHANNELS:
                assert -math.pi < v <= math.pi, f'{name}={v} outside (-pi, pi]'

    @classmethod
    def from_pose(cls, pose: Pose, schema_name: str) -> 'RobotState':
        schema = STATE_SCHEMAS[schema_name]
        roll, pitch, _ = pose.euler()
        channels = dict(zip(('x', 'y', 'z'), pose.position))
        q = pose.orientation.as_array()
        channels.update(zip(('qx', 'qy', 'qz', 'qw'), -q if q[3] < 0 else q))
        channels.update(roll=wrap_angle(roll), pitch=wrap_angle(pitch))
        return cls(tuple(channels[c] for c in schema), schema)

    def as_array(self, dtype=np.float32) -> np.ndarray:
        return np.array(self.values, dtype=dtype)


def schema_name_for_dim(dim: int, schemas: dict = STATE_SCHEMAS) -> str:
    """Infer the schema name from a vector length (used by the dataset
    container, which stores dimensions but not channel names)."""
    matches = [k for k, v in schemas.items() if len(v) == dim]
    assert matches, f'No schema with {dim} channels in {list(schemas)}'
    return matches[0]


def wrap_angle(angle: float) -> float:
    """Wrap into (-pi, pi]; -pi maps to +pi."""
    return -((-float(angle) + math.pi) % (2 * math.pi) - math.pi)


def quat_from_euler(roll: float, pitch: float, yaw: float) -> Quaternion:
    """Intrinsic Z-Y-X composition: yaw about z, then pitch, then roll."""
    return Quaternion(*pb.getQuaternionFromEuler([roll, pitch, yaw]))


def quat_to_euler(q: Quaternion) -> Tuple[float, float, float]:
    return tuple(pb.getEulerFromQuaternion(q.as_tuple()))


def quat_to_matrix(q: Quaternion) -> np.ndarray:
    return np.array(pb.getMatrixFromQuaternion(q.as_tuple())).reshape((3, 3))


def quat_multiply(q1: Quaternion, q2: Quaternion) -> Quaternion:
    """Hamilton product q1 * q2 (apply q2 first, then q1)."""
    _, q = pb.multiplyTransforms([0, 0, 0], q1.as_tuple(), [0, 0, 0],
                                 q2.as_tuple())
    return Quaternion(*q)


def quat_conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(-q.x, -q.y, -q.z, q.w)


def quat_rotate(q: Quaternion, v: Sequence[float]) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    assert v.shape == (3, ), f'Got shape={v.shape}'
    return quat_to_matrix(q) @ v


def rotation_distance_deg(q1: Quaternion, q2: Quaternion) -> float:
    """Angle of the rotation between q1 and q2, in [0, 180] degrees.

    Uses |<q1, q2>| so that q and -q are at distance zero.
    """
    dot = abs(float(q1.as_array() @ q2.as_array()))
    return math.degrees(2. * math.acos(min(1., max(0., dot))))


def base_frame(pose: Pose) -> Pose:
    _, _, yaw = pose.euler()
    return Pose(pose.position, quat_from_euler(0., 0., yaw))


def _in_base_frame(observer: Pose, target: Pose):
    base = base_frame(observer)
    inv_pos, inv_orn = pb.invertTransform(base.position,
                                          base.orientation.as_tuple())
    return pb.multiplyTransforms(inv_pos, inv_orn, target.position,
                                 target.orientation.as_tuple())


def relative_pose_base_frame(observer_world: Pose,
                             target_world: Pose) -> np.ndarray:
    """Target pose w.r.t. the observer's base frame as (x, y, z, phi).

    phi is the target's yaw relative to the observer's yaw, wrapped into
    (-pi, pi].
    """
    position, _ = _in_base_frame(observer_world, target_world)
    _, _, observer_yaw = observer_world.euler()
    _, _, target_yaw = target_world.euler()
    phi = wrap_angle(target_yaw - observer_yaw)
    return np.array([*position, phi])


def pose_to_label7(observer_world: Pose, target_world: Pose) -> np.ndarray:
    """Full relative pose (x, y, z, qx, qy, qz, qw) in the base frame.

    The quaternion sign is fixed to w >= 0 so that equal rotations get
    equal labels.
    """
    position, orientation = _in_base_frame(observer_world, target_world)
    q = np.array(orientation)
    if q[3] < 0:
        q = -q
    return np.concatenate([position, q])
