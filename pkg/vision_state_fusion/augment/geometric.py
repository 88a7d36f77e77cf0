"""Geometric augmentations that also transform the state and the label."""
import math
from typing import Optional

import numpy as np
from scipy import ndimage

from vision_state_fusion.errors import SchemaMismatchError
from vision_state_fusion.poses import (LABEL_SCHEMAS, STATE_SCHEMAS,
                                       quat_from_euler, quat_to_matrix,
                                       schema_name_for_dim, wrap_angle)
from vision_state_fusion.scene.bases import CameraIntrinsics, Sample
from vision_state_fusion.scene.camera import BODY_TO_CAMERA
from vision_state_fusion.augment.photometric import to_uint8

# channels that change sign when the scene is mirrored left/right
MIRRORED_CHANNELS = frozenset(('y', 'roll', 'phi', 'qx', 'qz'))


def _mirror(values: np.ndarray, schema) -> np.ndarray:
    signs = np.array([-1. if c in MIRRORED_CHANNELS else 1. for c in schema],
                     dtype=np.float32)
    return (values * signs).astype(np.float32)


def hflip(sample: Sample) -> Sample:
    """Mirror the image columns together with state and label.

    A world-frame pose state has no mirrored counterpart and raises
    SchemaMismatchError.
    """
    state_schema = STATE_SCHEMAS[schema_name_for_dim(len(sample.state),
                                                     STATE_SCHEMAS)]
    if 'qw' in state_schema:
        raise SchemaMismatchError(
            f'Cannot mirror a world-frame pose state {state_schema}')
    roll = sample.observer_roll
    label_schema = LABEL_SCHEMAS[schema_name_for_dim(len(sample.label),
                                                     LABEL_SCHEMAS)]
    return sample.replace(image=sample.image[:, ::-1].copy(),
                          state=_mirror(sample.state, state_schema),
                          label=_mirror(sample.label, label_schema),
                          observer_roll=None if roll is None else -roll)


def _pitch_roll(sample: Sample):
    schema = STATE_SCHEMAS[schema_name_for_dim(len(sample.state),
                                               STATE_SCHEMAS)]
    if 'pitch' not in schema:
        raise SchemaMismatchError(
            f'Pitch augmentation needs a pitch channel, state has {schema}')
    values = dict(zip(schema, (float(v) for v in sample.state)))
    roll = values.get('roll', sample.observer_roll)
    return schema.index('pitch'), values['pitch'], roll or 0.


def rotation_about_pitch_axis(delta: float) -> np.ndarray:
    """Camera-frame rotation taking old camera coordinates to new ones when
    the camera pitches by ``delta`` (positive: nose-down)."""
    body = quat_to_matrix(quat_from_euler(0., delta, 0.))
    return BODY_TO_CAMERA @ body.T @ BODY_TO_CAMERA.T


def target_visible_after_pitch(label: np.ndarray, pitch: float, roll: float,
                               delta: float,
                               intrinsics: CameraIntrinsics) -> bool:
    """Re-project the target center, reconstructed from the base-frame label
    and the state, into the camera pitched by ``delta``."""
    body_from_base = quat_to_matrix(quat_from_euler(roll, pitch, 0.)).T
    cam = rotation_about_pitch_axis(delta) @ BODY_TO_CAMERA @ (
        body_from_base @ np.asarray(label[:3], dtype=np.float64))
    x, y, depth = cam
    if not depth > 1e-9:
        return False
    u = intrinsics.cx + intrinsics.f * x / depth
    v = intrinsics.cy + intrinsics.f * y / depth
    return (-0.5 <= u < intrinsics.width - 0.5
            and -0.5 <= v < intrinsics.height - 0.5)


def warp_image(image: np.ndarray, delta: float,
               intrinsics: CameraIntrinsics) -> np.ndarray:
    """Inverse-map the image through the pure-rotation homography
    K M^T K^-1 with bilinear sampling and edge replication."""
    height, width = image.shape
    k = intrinsics
    vv, uu = np.meshgrid(np.arange(height, dtype=np.float64),
                         np.arange(width, dtype=np.float64),
                         indexing='ij')
    rays = np.stack([(uu - k.cx) / k.f, (vv - k.cy) / k.f, np.ones_like(uu)])
    old = np.tensordot(rotation_about_pitch_axis(delta).T, rays, axes=1)
    u_old = k.cx + k.f * old[0] / old[2]
    v_old = k.cy + k.f * old[1] / old[2]
    warped = ndimage.map_coordinates(image.astype(np.float64), [v_old, u_old],
                                     order=1,
                                     mode='nearest')
    return to_uint8(warped)


def pitch_warp(sample: Sample, delta: float,
               intrinsics: CameraIntrinsics) -> Optional[Sample]:
    """ Synthesize the view of the same scene from a camera pitched by
        ``delta`` radians.

    Returns
    -------
    The warped sample with ``pitch + delta`` in its state and the label
    untouched, or None when the target center would leave the image.
    """
    assert abs(delta) <= math.radians(17.) + 1e-12, \
        f'|delta|={math.degrees(abs(delta)):.2f} deg exceeds 17 deg'
    pitch_index, pitch, roll = _pitch_roll(sample)
    if not target_visible_after_pitch(sample.label, pitch, roll, delta,
                                      intrinsics):
        return None
    state = sample.state.copy()
    state[pitch_index] = wrap_angle(pitch + delta)
    return sample.replace(image=warp_image(sample.image, delta, intrinsics),
                          state=state)
