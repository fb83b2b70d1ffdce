"""Shared symmetric-solve and trace helpers.

The observable adjustments and the inferential estimators all need traces of
the form tr(D - D X (X'DX + c I)^{-1} X'D).  One factorization serves both the
solve and the trace; a dual n-by-n path handles p > n.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import RankError


def spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for symmetric positive-definite a."""
    try:
        return cho_solve(cho_factor(a), b)
    except LinAlgError as err:
        raise RankError(f"symmetric solve failed: {err}") from err


def adjustment_trace(x: np.ndarray, weights: np.ndarray, ridge: float) -> float:
    """tr(D - D X (X'DX + ridge I)^{-1} X'D) with D = diag(weights).

    For ridge > 0 and p > n the trace is computed through the n-by-n weighted
    Gram matrix: the push-through identity gives
    tr = ridge * tr(D (S S' + ridge I)^{-1}) with S = D^{1/2} X.
    Raises RankError when ridge = 0 and X'DX is singular.
    """
    n, p = x.shape
    weights = np.asarray(weights, dtype=float)
    if ridge > 0.0 and p > n:
        s = np.sqrt(weights)
        k = (s[:, None] * x) @ (s[:, None] * x).T
        k[np.diag_indices_from(k)] += ridge
        try:
            inv_diag = np.diag(cho_solve(cho_factor(k), np.eye(n)))
        except LinAlgError as err:
            raise RankError(f"dual Gram factorization failed: {err}") from err
        return float(ridge * np.sum(weights * inv_diag))
    dx = weights[:, None] * x
    b = x.T @ dx
    if ridge > 0.0:
        b[np.diag_indices_from(b)] += ridge
    c = dx.T @ dx
    try:
        fac = cho_factor(b)
    except LinAlgError as err:
        raise RankError(
            "weighted Gram matrix X'DX is singular at lambda = 0"
        ) from err
    return float(np.sum(weights) - np.trace(cho_solve(fac, c)))
