import abc
import math
from typing import Optional, Tuple

import numpy as np

from vision_state_fusion.errors import RenderError
from vision_state_fusion.poses import Pose, quat_to_matrix
from vision_state_fusion.scene.bases import CameraIntrinsics
from vision_state_fusion.scene.worlds import (Billboard, BillboardStyle,
                                              GroundPlane, Sky)

# body frame (x forward, y left, z up) -> camera frame (x right, y down,
# z forward)
BODY_TO_CAMERA = np.array([[0., -1., 0.], [0., 0., -1.], [1., 0., 0.]])

SURFACE_SKY = 0
SURFACE_GROUND = 1
SURFACE_BILLBOARD = 2


class Sensor(abc.ABC):
    """ Baseclass for sensor units mounted on the observer."""

    @abc.abstractmethod
    def measure(self, *args, **kwargs) -> np.ndarray:
        raise NotImplementedError

    @property
    @abc.abstractmethod
    def shape(self) -> tuple:
        """ Get the sensor dimension."""
        raise NotImplementedError


class PinholeCamera(Sensor):
    """ Monochrome pinhole camera rigidly aligned with the observer body.

        The camera looks along the body x-axis; its pose is the observer
        pose including pitch and roll.
    """

    def __init__(self,
                 intrinsics: CameraIntrinsics,
                 ground_z: float = -1.5,
                 checker_period: float = 0.5,
                 billboard_size=(0.45, 1.7)):
        self.intrinsics = intrinsics
        self.ground = GroundPlane(z=ground_z, period=checker_period)
        self.sky = Sky()
        self.billboard_size = tuple(billboard_size)
        jj, ii = np.meshgrid(np.arange(intrinsics.width, dtype=np.float64),
                             np.arange(intrinsics.height, dtype=np.float64))
        self._pixel_rays = np.stack([(jj - intrinsics.cx) / intrinsics.f,
                                     (ii - intrinsics.cy) / intrinsics.f,
                                     np.ones_like(jj)], axis=-1)

    @property
    def shape(self) -> tuple:
        return (self.intrinsics.height, self.intrinsics.width)

    @staticmethod
    def world_to_camera(camera_pose: Pose) -> np.ndarray:
        """Rotation taking world vectors into the camera frame."""
        return BODY_TO_CAMERA @ quat_to_matrix(camera_pose.orientation).T

    def project(self, camera_pose: Pose,
                world_point) -> Optional[Tuple[float, float]]:
        """Pixel (u, v) of a world point or None when it is not visible."""
        p = np.asarray(world_point, dtype=np.float64)
        assert p.shape == (3, ), f'Got shape={p.shape}'
        x, y, depth = self.world_to_camera(camera_pose) @ (
            p - camera_pose.position_array)
        if not depth > 1e-9:
            return None
        k = self.intrinsics
        u = k.cx + k.f * x / depth
        v = k.cy + k.f * y / depth
        if not (-0.5 <= u < k.width - 0.5 and -0.5 <= v < k.height - 0.5):
            return None
        return float(u), float(v)

    def ray_directions(self, camera_pose: Pose) -> np.ndarray:
        """World-frame direction of every pixel ray, shape (H, W, 3)."""
        return self._pixel_rays @ self.world_to_camera(camera_pose)

    def trace(self, observer: Pose, target: Optional[Pose] = None,
              group_id: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """Float intensities and the id of the surface each pixel hit."""
        _check_pose(observer, 'observer')
        origin = observer.position_array
        directions = self.ray_directions(observer)
        depth, intensity = self.sky.intersect(origin, directions)
        surface = np.full(depth.shape, SURFACE_SKY, dtype=np.int8)
        surfaces = [(SURFACE_GROUND, self.ground)]
        if target is not None:
            _check_pose(target, 'target')
            target_roll, _, target_yaw = target.euler()
            billboard = Billboard(position=target.position,
                                  yaw=target_yaw,
                                  roll=target_roll,
                                  viewer_position=observer.position,
                                  style=BillboardStyle.from_group(group_id),
                                  size=self.billboard_size)
            surfaces.append((SURFACE_BILLBOARD, billboard))
        for surface_id, s in surfaces:
            t, values = s.intersect(origin, directions)
            closer = t < depth
            depth = np.where(closer, t, depth)
            intensity = np.where(closer, values, intensity)
            surface[closer] = surface_id
        return intensity, surface

    def measure(self, observer: Pose, target: Optional[Pose] = None,
                group_id: int = 0) -> np.ndarray:
        intensity, _ = self.trace(observer, target, group_id)
        return np.clip(np.rint(intensity), 0, 255).astype(np.uint8)

    def horizon_row(self, pitch: float) -> float:
        """Image row of the horizon for a camera without roll."""
        return self.intrinsics.cy - self.intrinsics.f * math.tan(pitch)


def _check_pose(pose: Pose, name: str) -> None:
    q = pose.orientation.as_array()
    if not (pose.is_finite() and np.isfinite(q).all()):
        raise RenderError(f'Cannot render a non-finite {name} pose: {pose}')


def project_point(intrinsics: CameraIntrinsics, camera_pose: Pose,
                  world_point) -> Optional[Tuple[float, float]]:
    """ Pinhole projection of a world point.

    Returns
    -------
    (u, v) in pixels, or None if the point is behind the camera or falls
    outside the image.
    """
    return PinholeCamera(intrinsics).project(camera_pose, world_point)


def render(intrinsics: CameraIntrinsics,
           observer: Pose,
           target: Optional[Pose],
           group_id: int = 0,
           **world_kwargs) -> np.ndarray:
    """Render the 8-bit grayscale view of the observer camera."""
    return PinholeCamera(intrinsics, **world_kwargs).measure(observer, target,
                                                             group_id)
