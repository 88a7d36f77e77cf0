"""CSV outputs: per-model reports, per-run scores and paired summaries."""
import csv
import logging
import os
from typing import List

from vision_state_fusion.errors import DataFormatError, UsageError
from vision_state_fusion.evaluation.experiments import PairedComparison
from vision_state_fusion.evaluation.metrics import EvalReport
from vision_state_fusion.nets.costs import (PUBLISHED_ARCH, PUBLISHED_DELTAS,
                                         CostReport)

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['output', 'r2', 'mse', 'mae', 'dummy_mse',
                  'rotation_error_deg']
SCORE_COLUMNS = ['variant', 'key', 'output', 'r2', 'mse', 'mae', 'dummy_mse',
                 'rotation_error_deg']
SUMMARY_COLUMNS = ['variant', 'reference', 'output', 'n_pairs', 'median_r2',
                   'median_reference_r2', 'median_delta', 'mae_reduction',
                   'p_greater', 'p_two_sided']
COST_COLUMNS = ['arch', 'variant', 'bytes', 'macs', 'delta_bytes', 'delta_macs',
                'published_delta_bytes', 'published_delta_macs', 'status']


def _fmt(value) -> str:
    if value is None or value == '':
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path, columns: List[str], rows: List[dict]) -> None:
    with open(os.fspath(path), 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    logger.info('Wrote %d rows to %s', len(rows), path)


def report_rows(report: EvalReport) -> List[dict]:
    return [
        dict(output=name, r2=s.r2, mse=s.mse, mae=s.mae,
             dummy_mse=s.dummy_mse,
             rotation_error_deg=report.rotation_error_deg)
        for name, s in report.outputs.items()
    ]


def write_report_csv(path, report: EvalReport) -> None:
    _write(path, REPORT_COLUMNS, report_rows(report))


def score_rows(comparison: PairedComparison) -> List[dict]:
    rows = []
    for variant in comparison.variants:
        for key in comparison.keys:
            report = comparison.reports[(variant, key)]
            for row in report_rows(report):
                rows.append(dict(variant=variant, key=key, **row))
    return rows


def write_scores_csv(path, comparison: PairedComparison) -> None:
    _write(path, SCORE_COLUMNS, score_rows(comparison))


def write_summary_csv(path, comparison: PairedComparison) -> None:
    _write(path, SUMMARY_COLUMNS, comparison.summary_rows())


def cost_rows(reports: List[CostReport]) -> List[dict]:
    rows = []
    for r in reports:
        pub_bytes = pub_macs = ''
        if r.arch == PUBLISHED_ARCH and r.variant in PUBLISHED_DELTAS:
            (pub_bytes, pub_macs), _ = PUBLISHED_DELTAS[r.variant]
        rows.append(dict(arch=r.arch, variant=r.variant, bytes=r.total.bytes,
                         macs=r.total.macs, delta_bytes=r.delta.bytes,
                         delta_macs=r.delta.macs,
                         published_delta_bytes=pub_bytes,
                         published_delta_macs=pub_macs, status=r.status()))
    return rows


def write_costs_csv(path, reports: List[CostReport]) -> None:
    _write(path, COST_COLUMNS, cost_rows(reports))


def read_scores_csv(path) -> List[dict]:
    """Rows of a scores CSV with numeric fields converted to float.

    Raises UsageError for a file without rows and DataFormatError for
    missing columns or unparsable numbers.
    """
    with open(os.fspath(path), newline='') as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        rows = list(reader)
    if not rows:
        raise UsageError(f'{path} contains no score rows')
    missing = [c for c in ('variant', 'key', 'output', 'r2')
               if c not in header]
    if missing:
        raise DataFormatError(f'{path}: missing columns {missing}')
    parsed = []
    for i, row in enumerate(rows, start=2):
        try:
            out = dict(row)
            for c in ('r2', 'mse', 'mae', 'dummy_mse', 'rotation_error_deg'):
                if row.get(c) not in (None, ''):
                    out[c] = float(row[c])
            parsed.append(out)
        except ValueError as e:
            raise DataFormatError(f'{path}, line {i}: {e}') from e
    return parsed
