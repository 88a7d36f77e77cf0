"""Per-output regression metrics and the orientation error of pose labels."""
import collections
import dataclasses
from typing import Dict, Optional, Tuple

import numpy as np

from vision_state_fusion.errors import DataFormatError, NumericalError
from vision_state_fusion.poses import (LABEL_SCHEMAS, Quaternion,
                                       rotation_distance_deg,
                                       schema_name_for_dim)


def _as_pair(y, y_hat) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    assert y.shape == y_hat.shape, f'{y.shape} != {y_hat.shape}'
    if y.size == 0:
        raise DataFormatError('Cannot score an empty set of predictions.')
    return y, y_hat


def mse(y, y_hat) -> float:
    y, y_hat = _as_pair(y, y_hat)
    return float(np.mean((y - y_hat)**2))


def mae(y, y_hat) -> float:
    y, y_hat = _as_pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def dummy_mse(y) -> float:
    """MSE of always predicting the mean, i.e. the population variance."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise DataFormatError('Cannot score an empty set of targets.')
    return float(np.var(y))


def r2_score(y, y_hat) -> float:
    """1 - SS_res / SS_tot; unbounded below."""
    y, y_hat = _as_pair(y, y_hat)
    assert y.size >= 2, 'R2 needs at least two targets'
    ss_tot = float(np.sum((y - y.mean())**2))
    if ss_tot == 0:
        raise NumericalError('R2 is undefined for zero-variance targets.')
    return 1. - float(np.sum((y - y_hat)**2)) / ss_tot


def mean_rotation_error_deg(true_quats, pred_quats) -> float:
    """Mean quaternion distance in degrees; predictions are normalized
    first and a zero-norm prediction raises NumericalError."""
    true_quats = np.asarray(true_quats, dtype=np.float64)
    pred_quats = np.asarray(pred_quats, dtype=np.float64)
    assert true_quats.shape == pred_quats.shape and true_quats.shape[1:] == \
        (4, ), f'Expected two (N, 4) arrays, got {true_quats.shape} and ' \
               f'{pred_quats.shape}'
    if len(true_quats) == 0:
        raise DataFormatError('Cannot score an empty set of rotations.')
    distances = [
        rotation_distance_deg(Quaternion.from_array(q), Quaternion.from_array(p))
        for q, p in zip(true_quats, pred_quats)
    ]
    return float(np.mean(distances))


def relative_mae_reduction(mae_stateless: float, mae_stateful: float) -> float:
    """Fraction of the stateless MAE removed by the stateful model."""
    if mae_stateless == 0:
        raise NumericalError('Reference MAE is zero.')
    return (mae_stateless - mae_stateful) / mae_stateless


@dataclasses.dataclass(frozen=True)
class OutputScores:
    r2: float
    mse: float
    mae: float
    dummy_mse: float


@dataclasses.dataclass
class EvalReport:
    outputs: Dict[str, OutputScores]
    n_samples: int
    rotation_error_deg: Optional[float] = None
    model_id: str = ''
    variant: str = ''
    seed: Optional[int] = None

    def __getitem__(self, output: str) -> OutputScores:
        return self.outputs[output]


def score_outputs(labels: np.ndarray, predictions: np.ndarray,
                  names=None) -> EvalReport:
    labels = np.asarray(labels, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    assert labels.shape == predictions.shape, \
        f'labels {labels.shape} != predictions {predictions.shape}'
    if names is None:
        names = LABEL_SCHEMAS[schema_name_for_dim(labels.shape[1],
                                                  LABEL_SCHEMAS)]
    outputs = collections.OrderedDict()
    for i, name in enumerate(names):
        y, y_hat = labels[:, i], predictions[:, i]
        outputs[name] = OutputScores(r2=r2_score(y, y_hat),
                                     mse=mse(y, y_hat),
                                     mae=mae(y, y_hat),
                                     dummy_mse=dummy_mse(y))
    rotation = None
    if labels.shape[1] == 7:
        rotation = mean_rotation_error_deg(labels[:, 3:], predictions[:, 3:])
    return EvalReport(outputs=outputs, n_samples=len(labels),
                      rotation_error_deg=rotation)
