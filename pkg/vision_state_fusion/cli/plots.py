""" Static SVG figures of paired scores.

    One box plot per output variable with every variant side by side, and a
    scatter of each variant against the reference variant with the line of
    equivalence: points above the diagonal are runs where the variant scored
    higher than the reference.
"""
import collections
import logging
import os
from typing import Dict, List

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

COLORS = ('tab:gray', 'tab:blue', 'tab:orange', 'tab:green', 'tab:red')


def scores_by_output(rows: List[dict]) -> Dict[str, Dict[str, Dict]]:
    """{output: {variant: {key: r2}}} preserving first-seen order."""
    table = collections.OrderedDict()
    for row in rows:
        by_variant = table.setdefault(row['output'],
                                      collections.OrderedDict())
        by_variant.setdefault(row['variant'],
                              collections.OrderedDict())[row['key']] = row['r2']
    return table


def paired_points(scores: Dict[str, Dict], reference: str, variant: str):
    """(reference R2, variant R2) for every key present in both runs."""
    keys = [k for k in scores[reference] if k in scores[variant]]
    return ([scores[reference][k] for k in keys],
            [scores[variant][k] for k in keys])


def plot_boxes(ax, scores: Dict[str, Dict], output: str) -> None:
    variants = list(scores)
    box = ax.boxplot([list(scores[v].values()) for v in variants],
                     patch_artist=True)
    for patch, color in zip(box['boxes'], COLORS * len(variants)):
        patch.set_facecolor(color)
        patch.set_alpha(0.6)
    ax.set_xticks(range(1, len(variants) + 1))
    ax.set_xticklabels(variants, rotation=30, fontsize=7)
    ax.set_title(output)
    ax.set_ylabel('R2')


def plot_equivalence(ax, table: Dict[str, Dict[str, Dict]],
                     reference: str) -> None:
    lo, hi = 1., 0.
    for output, scores in table.items():
        for i, variant in enumerate(v for v in scores if v != reference):
            x, y = paired_points(scores, reference, variant)
            if not x:
                continue
            ax.scatter(x, y, s=14, color=COLORS[(i + 1) % len(COLORS)],
                       label=f'{variant} / {output}')
            lo = min(lo, min(x), min(y))
            hi = max(hi, max(x), max(y))
    pad = 0.05 * max(hi - lo, 1e-3)
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], 'k--', linewidth=0.8)
    ax.set_xlim(lo - pad, hi + pad)
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlabel(f'{reference} R2')
    ax.set_ylabel('variant R2')
    ax.set_title('line of equivalence')
    if ax.collections:
        ax.legend(fontsize=6)


def write_report_svg(path, rows: List[dict]) -> None:
    """Write the box plots and the equivalence scatter into one SVG file."""
    table = scores_by_output(rows)
    reference = rows[0]['variant']
    n = len(table) + 1
    fig, axes = plt.subplots(1, n, figsize=(3. * n, 3.2))
    for ax, output in zip(axes[:-1], table):
        plot_boxes(ax, table[output], output)
    plot_equivalence(axes[-1], table, reference)
    fig.tight_layout()
    # fixed ids and no date keep the output reproducible
    with matplotlib.rc_context({'svg.hashsalt': 'vision-state-fusion'}):
        fig.savefig(os.fspath(path), format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info('Wrote report figure to %s', path)
