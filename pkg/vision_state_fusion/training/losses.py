import numpy as np


def l1_loss(pred: np.ndarray, target: np.ndarray):
    """ Mean absolute error over every scalar of the batch.

    Returns
    -------
    (loss, gradient w.r.t. pred) with gradient sign(pred - target) / N;
    the subgradient at pred == target is 0.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    assert pred.shape == target.shape, \
        f'pred {pred.shape} and target {target.shape} differ'
    diff = pred - target.astype(pred.dtype)
    n = diff.size
    loss = float(np.abs(diff).sum() / n) if n else 0.
    return loss, (np.sign(diff) / max(n, 1)).astype(pred.dtype)
