import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple

import numpy as np

from vision_state_fusion.augment.geometric import hflip, pitch_warp
from vision_state_fusion.augment.photometric import (add_noise,
                                                     apply_exposure,
                                                     apply_gamma, apply_range,
                                                     blur, vignette)
from vision_state_fusion.scene.bases import CameraIntrinsics, Sample
from vision_state_fusion.scene.dataset import Dataset
from vision_state_fusion.utils import make_rng

logger = logging.getLogger(__name__)


def _check_range(name, value, lo=-np.inf, hi=np.inf):
    assert len(value) == 2 and value[0] <= value[1], \
        f'{name}={value} must be a (min, max) pair'
    assert lo <= value[0] and value[1] <= hi, f'{name}={value} outside ' \
                                              f'[{lo}, {hi}]'


@dataclasses.dataclass(frozen=True)
class AugmentConfig:
    """Offline augmentation parameters; every range is sampled uniformly."""
    gain_range: Tuple[float, float] = (0.7, 1.3)
    gamma_range: Tuple[float, float] = (0.6, 1.6)
    range_lo: Tuple[float, float] = (0., 30.)
    range_hi: Tuple[float, float] = (225., 255.)
    noise_sigma: Tuple[float, float] = (0., 8.)
    blur_sigma: Tuple[float, float] = (0., 1.5)
    vignette: Tuple[float, float] = (0., 0.4)
    flip_prob: float = 0.5
    pitch_range_deg: float = 17.0
    copies: int = 10
    seed: int = 0

    def __post_init__(self):
        _check_range('gain_range', self.gain_range, lo=1e-6)
        _check_range('gamma_range', self.gamma_range, lo=1e-6)
        _check_range('range_lo', self.range_lo, lo=0., hi=255.)
        _check_range('range_hi', self.range_hi, lo=0., hi=255.)
        assert self.range_lo[1] < self.range_hi[0], \
            'range_lo must stay below range_hi'
        _check_range('noise_sigma', self.noise_sigma, lo=0.)
        _check_range('blur_sigma', self.blur_sigma, lo=0.)
        _check_range('vignette', self.vignette, lo=0., hi=1.)
        assert 0. <= self.flip_prob <= 1., f'flip_prob={self.flip_prob}'
        assert 0. <= self.pitch_range_deg <= 17., \
            f'pitch_range_deg={self.pitch_range_deg} outside [0, 17]'
        assert self.copies >= 1, f'copies={self.copies} must be >= 1'

    @classmethod
    def identity(cls, copies: int = 1, seed: int = 0) -> 'AugmentConfig':
        """Configuration whose every operation leaves a sample unchanged."""
        return cls(gain_range=(1., 1.), gamma_range=(1., 1.),
                   range_lo=(0., 0.), range_hi=(255., 255.),
                   noise_sigma=(0., 0.), blur_sigma=(0., 0.),
                   vignette=(0., 0.), flip_prob=0., pitch_range_deg=0.,
                   copies=copies, seed=seed)


@dataclasses.dataclass(frozen=True)
class AugmentParams:
    gain: float
    gamma: float
    lo: float
    hi: float
    noise_sigma: float
    blur_sigma: float
    vignette: float
    flip: bool
    delta: float

    @classmethod
    def draw(cls, config: AugmentConfig,
             rng: np.random.Generator) -> 'AugmentParams':
        """Draw all parameters of one copy, always in the same order."""
        max_delta = math.radians(config.pitch_range_deg)
        return cls(gain=rng.uniform(*config.gain_range),
                   gamma=rng.uniform(*config.gamma_range),
                   lo=rng.uniform(*config.range_lo),
                   hi=rng.uniform(*config.range_hi),
                   noise_sigma=rng.uniform(*config.noise_sigma),
                   blur_sigma=rng.uniform(*config.blur_sigma),
                   vignette=rng.uniform(*config.vignette),
                   flip=bool(rng.uniform() < config.flip_prob),
                   delta=rng.uniform(-max_delta, max_delta))


def augment_copy(sample: Sample, params: AugmentParams,
                 rng: np.random.Generator,
                 intrinsics: CameraIntrinsics):
    """Photometric ops, then vignette, then flip, then pitch synthesis."""
    image = apply_exposure(sample.image, params.gain)
    image = apply_gamma(image, params.gamma)
    image = apply_range(image, params.lo, params.hi)
    image = add_noise(image, params.noise_sigma, rng)
    image = blur(image, params.blur_sigma)
    image = vignette(image, params.vignette)
    out = sample.replace(image=image)
    if params.flip:
        out = hflip(out)
    if params.delta != 0.:
        out = pitch_warp(out, params.delta, intrinsics)
    return out


def augment_pipeline(sample: Sample,
                     config: AugmentConfig,
                     rng: np.random.Generator,
                     intrinsics: CameraIntrinsics = CameraIntrinsics()
                     ) -> List[Sample]:
    """ Produce up to ``config.copies`` augmented copies of one sample.

    Every copy draws from its own child stream of ``rng``; copies whose
    target leaves the image under pitch synthesis are dropped.
    """
    out = []
    for child in rng.spawn(config.copies):
        params = AugmentParams.draw(config, child)
        augmented = augment_copy(sample, params, child, intrinsics)
        if augmented is not None:
            out.append(augmented)
    return out


def augment_dataset(dataset: Dataset,
                    config: AugmentConfig,
                    intrinsics: CameraIntrinsics = CameraIntrinsics(),
                    jobs: int = 1) -> Tuple[Dataset, int]:
    """Augment every sample with the stream keyed by (seed, sample index).

    Returns
    -------
    The augmented dataset (copies only, grouped by source sample) and the
    number of discarded copies.
    """
    height, width = dataset.image_shape
    assert (height, width) == (intrinsics.height, intrinsics.width), \
        f'Images are {height}x{width}, intrinsics expect ' \
        f'{intrinsics.height}x{intrinsics.width}'

    def work(index):
        return augment_pipeline(dataset[index], config,
                                make_rng(config.seed, index), intrinsics)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(work, range(len(dataset))))
    else:
        batches = [work(i) for i in range(len(dataset))]
    samples = [s for batch in batches for s in batch]
    discarded = config.copies * len(dataset) - len(samples)
    logger.info('Augmented %d samples into %d copies (%d discarded)',
                len(dataset), len(samples), discarded)
    augmented = Dataset.from_samples(samples, dataset.n_groups,
                                     header=dataset.header_for())
    return augmented, discarded
