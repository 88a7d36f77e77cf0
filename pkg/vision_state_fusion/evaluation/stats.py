"""Exact Wilcoxon signed-rank test for small paired samples."""
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from vision_state_fusion.errors import NumericalError, UsageError

ALTERNATIVES = ('greater', 'less', 'two_sided')
MAX_EXACT_PAIRS = 25


def signed_rank_distribution(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Number of sign assignments giving each value of the doubled positive
    rank sum (index = sum). Summing over all 2^n assignments is a subset-sum
    count, built one rank at a time."""
    counts = np.zeros(int(sum(doubled_ranks)) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    return counts


def wilcoxon_tails(differences) -> Tuple[float, float]:
    """Exact (P[W+ >= observed], P[W+ <= observed]) under the null.

    Zero differences are dropped; ties among |d| get average ranks and the
    null distribution is enumerated with those ranks.
    """
    d = np.asarray(differences, dtype=np.float64).ravel()
    d = d[d != 0]
    if d.size == 0:
        raise NumericalError('All paired differences are zero.')
    if d.size > MAX_EXACT_PAIRS:
        raise UsageError(f'Exact test supports at most {MAX_EXACT_PAIRS} '
                         f'non-zero pairs, got {d.size}')
    doubled = np.rint(2. * rankdata(np.abs(d), method='average')).astype(
        np.int64)
    counts = signed_rank_distribution(doubled)
    observed = int(doubled[d > 0].sum())
    total = float(2**d.size)
    p_greater = counts[observed:].sum() / total
    p_less = counts[:observed + 1].sum() / total
    return float(p_greater), float(p_less)


def wilcoxon_exact(differences, alternative: str = 'greater') -> float:
    """ Exact paired signed-rank test on ``differences`` (variant - reference).

    Parameters
    ----------
    differences: paired score deltas, 1 <= n <= 25 after dropping zeros
    alternative: 'greater' (deltas tend to be positive), 'less' or
        'two_sided' (min(1, 2 * smaller tail))

    Returns
    -------
    p-value in (0, 1]
    """
    if alternative not in ALTERNATIVES:
        raise UsageError(f'alternative={alternative} not in {ALTERNATIVES}')
    p_greater, p_less = wilcoxon_tails(differences)
    if alternative == 'greater':
        return p_greater
    if alternative == 'less':
        return p_less
    return min(1., 2. * min(p_greater, p_less))


def median_delta(pairs) -> float:
    """Median of (variant - reference) over (reference, variant) pairs;
    even counts take the midpoint of the two central values."""
    pairs = np.asarray(pairs, dtype=np.float64)
    assert pairs.ndim == 2 and pairs.shape[1] == 2 and len(pairs), \
        f'Expected (n, 2) pairs, got {pairs.shape}'
    return float(np.median(pairs[:, 1] - pairs[:, 0]))
