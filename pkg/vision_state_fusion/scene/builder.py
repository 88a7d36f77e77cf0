import collections
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, Tuple

import numpy as np

from vision_state_fusion.errors import RenderError
from vision_state_fusion.poses import (Pose, RobotState, pose_to_label7,
                                       quat_rotate, quat_from_euler,
                                       relative_pose_base_frame, wrap_angle)
from vision_state_fusion.scene.bases import (CameraIntrinsics, Sample,
                                             SceneConfig)
from vision_state_fusion.scene.camera import PinholeCamera
from vision_state_fusion.scene.dataset import Dataset
from vision_state_fusion.utils import make_rng

logger = logging.getLogger(__name__)

AmbiguousPair = collections.namedtuple(
    'AmbiguousPair', ['z1', 'pitch1', 'z2', 'pitch2', 'mean_abs_diff'])


def sample_scene(config: SceneConfig,
                 index: int,
                 attempt: int = 0) -> Tuple[Pose, Pose, int]:
    """ Draw the observer and target world poses of sample ``index``.

    The draws come from the stream addressed by (seed, index, attempt), so
    each sample is reproducible on its own and samples can be generated in
    any order. Group ids cycle through ``range(n_groups)`` so every group
    receives the same number of samples (up to one).

    Returns
    -------
    observer, target, group_id
    """
    rng = make_rng(config.seed, index, attempt)
    group_id = index % config.n_groups
    yaw = rng.uniform(-math.pi, math.pi)
    position = (*rng.uniform(-config.world_extent, config.world_extent, 2),
                rng.uniform(*config.observer_altitude))
    pitch = math.radians(rng.uniform(*config.pitch_range_deg))
    roll = math.radians(rng.uniform(*config.roll_range_deg))
    relative = np.array([rng.uniform(*config.x_range),
                         rng.uniform(*config.y_range),
                         rng.uniform(*config.z_range)])
    phi = rng.uniform(*config.phi_range)
    lean = math.radians(rng.uniform(*config.target_roll_range_deg))
    observer = Pose.from_euler(position, roll=roll, pitch=pitch, yaw=yaw)
    # relative pose is drawn in the observer's base frame (yaw only)
    offset = quat_rotate(quat_from_euler(0., 0., yaw), relative)
    target = Pose.from_euler(np.asarray(position) + offset, roll=lean,
                             yaw=wrap_angle(yaw + phi))
    return observer, target, group_id


def make_label(observer: Pose, target: Pose, label_schema: str) -> np.ndarray:
    if label_schema == 'pose7':
        return pose_to_label7(observer, target)
    return relative_pose_base_frame(observer, target)


class SceneBuilder(object):
    """ Turns a scene configuration into rendered, labeled samples.

        Samples whose target center falls outside the image are redrawn
        with the next attempt of the same index; ``discarded`` counts the
        redraws over the lifetime of the builder.
    """

    def __init__(self,
                 config: SceneConfig,
                 intrinsics: CameraIntrinsics = CameraIntrinsics(),
                 debug: bool = False):
        self.config = config
        self.intrinsics = intrinsics
        self.camera = PinholeCamera(intrinsics,
                                    ground_z=config.ground_z,
                                    checker_period=config.checker_period,
                                    billboard_size=config.billboard_size)
        self.debug = debug
        self.discarded = 0

    def make_sample(self, index: int) -> Tuple[Sample, int]:
        """Returns the sample of ``index`` and the number of redraws."""
        for attempt in range(self.config.max_attempts):
            observer, target, group_id = sample_scene(self.config, index,
                                                      attempt)
            if self.camera.project(observer, target.position_array) is None:
                continue
            image = self.camera.measure(observer, target, group_id)
            state = RobotState.from_pose(observer, self.config.state_schema)
            label = make_label(observer, target, self.config.label_schema)
            if self.debug:
                print(f'sample {index}: attempt={attempt} group={group_id} '
                      f'label={np.round(label, 3)}')
            roll, _, _ = observer.euler()
            return Sample(image, state.as_array(), label, group_id,
                          observer_roll=roll), attempt
        raise RenderError(f'Sample {index}: target out of view in all '
                          f'{self.config.max_attempts} attempts')

    def build(self, n: int, jobs: int = 1) -> Dataset:
        assert n > 0, f'n={n} must be positive'
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(self.make_sample, range(n)))
        else:
            results = [self.make_sample(i) for i in range(n)]
        samples = [s for s, _ in results]
        discarded = sum(d for _, d in results)
        self.discarded += discarded
        logger.info('Generated %d samples (%d out-of-view draws discarded)',
                    n, discarded)
        return Dataset.from_samples(samples, n_groups=self.config.n_groups)


def generate_dataset(config: SceneConfig,
                     intrinsics: CameraIntrinsics = CameraIntrinsics(),
                     n: int = 1000,
                     jobs: int = 1) -> Dataset:
    """Render ``n`` in-view samples; a pure function of its arguments."""
    return SceneBuilder(config, intrinsics).build(n, jobs=jobs)


def find_ambiguous_pair(intrinsics: CameraIntrinsics,
                        target: Pose,
                        observer_xy: Sequence[float] = (0., 0.),
                        observer_yaw: float = 0.,
                        z_values: Sequence[float] = (-0.25, 0., 0.25),
                        pitch_values_deg: Sequence[float] = tuple(
                            np.arange(-17., 17.01, 0.25)),
                        min_dz: float = 0.2,
                        group_id: int = 0,
                        **world_kwargs) -> AmbiguousPair:
    """ Search observer altitude/pitch states that render (almost) the same
        image of a fixed target while the target's relative height differs
        by more than ``min_dz``.

    Returns
    -------
    The pair with the smallest mean absolute pixel difference (8-bit
    levels) among all state pairs whose altitudes differ by more than
    ``min_dz``.
    """
    camera = PinholeCamera(intrinsics, **world_kwargs)
    x, y = observer_xy
    images = {}
    for z in z_values:
        images[z] = np.stack([
            camera.measure(
                Pose.from_euler((x, y, z),
                                pitch=math.radians(p),
                                yaw=observer_yaw), target,
                group_id).ravel().astype(np.float64)
            for p in pitch_values_deg
        ])
    best = None
    for i, z1 in enumerate(z_values):
        for z2 in z_values[i + 1:]:
            if abs(z1 - z2) <= min_dz:
                continue
            for a, row in enumerate(images[z1]):
                diffs = np.abs(images[z2] - row).mean(axis=1)
                b = int(np.argmin(diffs))
                if best is None or diffs[b] < best.mean_abs_diff:
                    best = AmbiguousPair(z1, pitch_values_deg[a], z2,
                                         pitch_values_deg[b], float(diffs[b]))
    assert best is not None, f'No altitude pair differs by more than {min_dz}'
    return best
