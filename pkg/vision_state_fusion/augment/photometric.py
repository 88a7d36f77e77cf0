"""Per-pixel intensity augmentations of 8-bit grayscale images.

Every operation returns a new uint8 image; intermediate results are
computed in float64, rounded half-to-even and clamped to [0, 255].
"""
import numpy as np
from scipy import ndimage


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image), 0, 255).astype(np.uint8)


def apply_gamma(image: np.ndarray, gamma: float) -> np.ndarray:
    assert gamma > 0, f'gamma={gamma} must be positive'
    x = np.asarray(image, dtype=np.float64) / 255.
    return to_uint8(255. * np.power(x, gamma))


def apply_exposure(image: np.ndarray, gain: float) -> np.ndarray:
    assert gain > 0, f'gain={gain} must be positive'
    return to_uint8(gain * np.asarray(image, dtype=np.float64))


def apply_range(image: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Affine remap of [0, 255] onto [lo, hi]."""
    assert 0 <= lo < hi <= 255, f'Invalid range lo={lo}, hi={hi}'
    x = np.asarray(image, dtype=np.float64)
    return to_uint8(lo + x * (hi - lo) / 255.)


def add_noise(image: np.ndarray, sigma: float,
              rng: np.random.Generator) -> np.ndarray:
    # draw even for sigma == 0 so the stream position never depends on sigma
    assert sigma >= 0, f'sigma={sigma} must be non-negative'
    noise = rng.standard_normal(np.shape(image))
    return to_uint8(np.asarray(image, dtype=np.float64) + sigma * noise)


def blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur truncated at 3 sigma with reflect padding."""
    assert sigma >= 0, f'sigma={sigma} must be non-negative'
    if sigma == 0:
        return np.array(image, dtype=np.uint8)
    smoothed = ndimage.gaussian_filter(np.asarray(image, dtype=np.float64),
                                       sigma=sigma,
                                       mode='reflect',
                                       truncate=3.0)
    return to_uint8(smoothed)


def vignette_mask(shape, strength: float) -> np.ndarray:
    height, width = shape
    ii, jj = np.meshgrid(np.arange(height, dtype=np.float64),
                         np.arange(width, dtype=np.float64),
                         indexing='ij')
    ci, cj = (height - 1) / 2., (width - 1) / 2.
    r2 = (ii - ci)**2 + (jj - cj)**2
    r2_max = ci**2 + cj**2
    if r2_max == 0:
        return np.ones(shape)
    return 1. - strength * r2 / r2_max


def vignette(image: np.ndarray, strength: float) -> np.ndarray:
    """Darken toward the corners: scale by 1 - strength * (r / r_max)^2."""
    assert 0 <= strength <= 1, f'strength={strength} outside [0, 1]'
    image = np.asarray(image)
    return to_uint8(image.astype(np.float64) *
                    vignette_mask(image.shape, strength))
