"""NumPy fallback for the hot kernels.

Operates on the one-hot index form: ``idx`` is an (n, groups) int32 array
where each row lists the active feature column of every categorical group.
Mirrors ``venuetrace.kernels._native`` exactly (up to float summation order).
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def logreg_fit(
    idx: np.ndarray,
    n_features: int,
    y: np.ndarray,
    learning_rate: float,
    iterations: int,
    l2: float,
    w0: np.ndarray | None = None,
    b0: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Full-batch gradient descent on L2-regularized logistic loss.

    Deterministic given inputs; starts from zeros unless warm-started.
    """
    n, groups = idx.shape
    w = np.zeros(n_features) if w0 is None else np.array(w0, dtype=np.float64, copy=True)
    b = float(b0)
    flat = idx.ravel()
    y = np.asarray(y, dtype=np.float64)
    for _ in range(iterations):
        residual = expit(w[idx].sum(axis=1) + b) - y
        gw = np.bincount(flat, weights=np.repeat(residual, groups), minlength=n_features)
        w -= learning_rate * (gw + l2 * w) / n
        b -= learning_rate * residual.mean()
    return w, b


def logreg_margins(idx: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    """Pre-sigmoid scores w.x + b for one-hot index rows."""
    return w[idx].sum(axis=1) + b


def logreg_predict(idx: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    return expit(logreg_margins(idx, w, b))
