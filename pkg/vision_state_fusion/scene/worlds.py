"""Surfaces of the synthetic world, intersected by batches of camera rays.

Every surface returns, per ray, the hit distance (``inf`` on a miss) and the
intensity at the hit point. Intensities are evaluated at the exact hit point
(nearest-neighbor sampling of the procedural pattern, no anti-aliasing).
"""
import abc
import math

import numpy as np

from vision_state_fusion.utils import make_rng

SKY_INTENSITY = 116.0
# checker tones straddle the sky so the horizon stays a weak cue
GROUND_TONES = (114.0, 118.0)
STRIPE_INTENSITY = 15.0


class Surface(abc.ABC):
    """ Baseclass for everything a camera ray can hit."""

    @abc.abstractmethod
    def intersect(self, origin: np.ndarray, directions: np.ndarray) -> tuple:
        """Returns (distance, intensity) arrays shaped like directions[..., 0].
        """
        raise NotImplementedError


class Sky(Surface):

    def __init__(self, intensity: float = SKY_INTENSITY):
        self.intensity = intensity

    def intersect(self, origin, directions):
        shape = directions.shape[:-1]
        return np.full(shape, np.inf), np.full(shape, self.intensity)


class GroundPlane(Surface):
    """Infinite horizontal checkerboard at height z.

    Cells are centered on the world axes, so the pattern is symmetric under
    y -> -y (a horizontally mirrored scene renders as the mirrored image).
    """

    def __init__(self, z: float = -1.5, period: float = 0.5,
                 tones: tuple = GROUND_TONES):
        assert period > 0
        self.z = z
        self.period = period
        self.tones = np.array(tones, dtype=np.float64)

    def intersect(self, origin, directions):
        dz = directions[..., 2]
        with np.errstate(divide='ignore', invalid='ignore'):
            t = np.where(dz < 0, (self.z - origin[2]) / dz, np.inf)
        t = np.where(t > 0, t, np.inf)
        hit = origin + np.where(np.isfinite(t), t, 0.)[..., None] * directions
        cells = (np.floor(hit[..., 0] / self.period + 0.5) +
                 np.floor(hit[..., 1] / self.period + 0.5))
        intensity = self.tones[(cells % 2).astype(np.int64)]
        return t, intensity


class BillboardStyle:
    """Group-specific appearance of a subject billboard (its "clothing")."""

    def __init__(self, upper_tone: float, lower_tone: float, split: float):
        self.upper_tone = upper_tone
        self.lower_tone = lower_tone
        self.split = split

    @classmethod
    def from_group(cls, group_id: int) -> 'BillboardStyle':
        rng = make_rng(0xB111B0A2D, group_id)
        return cls(upper_tone=rng.uniform(140., 190.),
                   lower_tone=rng.uniform(50., 110.),
                   split=rng.uniform(-0.25, 0.15))

    def __repr__(self):
        return (f'BillboardStyle(upper={self.upper_tone:.1f}, '
                f'lower={self.lower_tone:.1f}, split={self.split:.2f})')


class Billboard(Surface):
    """Vertical rectangle centered on the target, always facing the viewer.

    The pattern encodes the subject's yaw relative to the line of sight
    (``view_yaw``): overall shading follows (1 + cos view_yaw) / 2, the
    side toward which the subject turns is lit brighter and a dark stripe
    sits at 0.15 * sin(view_yaw) meters off center. Horizontal coordinates
    ``s`` grow toward the viewer's right, so the pattern satisfies
    pattern(-s, -view_yaw) == pattern(s, view_yaw). A non-zero ``roll``
    leans the rectangle within its plane, toward the viewer's left for
    positive values.
    """

    def __init__(self, position, yaw: float, viewer_position, style:
                 BillboardStyle, size=(0.45, 1.7), stripe_width: float = 0.06,
                 roll: float = 0.):
        self.position = np.asarray(position, dtype=np.float64)
        self.half_width = size[0] / 2.
        self.half_height = size[1] / 2.
        self.stripe_width = stripe_width
        self.style = style
        los = self.position[:2] - np.asarray(viewer_position, np.float64)[:2]
        dist = np.linalg.norm(los)
        assert dist > 1e-9, 'viewer stands inside the billboard'
        los /= dist
        self.normal = np.array([-los[0], -los[1], 0.])
        right = np.array([los[1], -los[0], 0.])
        up = np.array([0., 0., 1.])
        c, s = math.cos(roll), math.sin(roll)
        self.right = c * right + s * up
        self.up = c * up - s * right
        view_yaw = yaw - math.atan2(los[1], los[0])
        self.view_yaw = math.atan2(math.sin(view_yaw), math.cos(view_yaw))

    def pattern(self, s: np.ndarray, h: np.ndarray) -> np.ndarray:
        sin_v, cos_v = math.sin(self.view_yaw), math.cos(self.view_yaw)
        tone = np.where(h >= self.style.split, self.style.upper_tone,
                        self.style.lower_tone)
        tone = tone * (1. + 0.3 * np.sign(s) * sin_v)
        stripe_center = 0.15 * sin_v
        in_stripe = np.abs(s - stripe_center) <= self.stripe_width / 2.
        tone = np.where(in_stripe, STRIPE_INTENSITY, tone)
        return tone * (1. + cos_v) / 2.

    def intersect(self, origin, directions):
        denom = directions @ self.normal
        with np.errstate(divide='ignore', invalid='ignore'):
            t = np.where(denom < 0,
                         ((self.position - origin) @ self.normal) / denom,
                         np.inf)
        t = np.where(t > 0, t, np.inf)
        finite = np.isfinite(t)
        hit = origin + np.where(finite, t, 0.)[..., None] * directions
        rel = hit - self.position
        s = rel @ self.right
        h = rel @ self.up
        inside = (finite & (np.abs(s) <= self.half_width) &
                  (np.abs(h) <= self.half_height))
        t = np.where(inside, t, np.inf)
        return t, self.pattern(s, h)
