"""Debiased index estimator and its standardized diagnostic."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError
from .pilot import PilotFit, pilot_score_residual


@dataclass(frozen=True)
class IndexEstimate:
    """Debiased index values W_i and the noise ratio sigma^2/mu^2 that
    parameterizes the deconvolution kernel downstream."""

    w: np.ndarray
    varsigma2: float


def debias_index(x: np.ndarray, y: np.ndarray, fit: PilotFit) -> IndexEstimate:
    """W_i = mu^{-1} (b'X_i - gamma psi_i) for the pilot b.

    psi is the pilot's score residual: y - b'X for the quadratic-loss
    pilots and y - g0(b'X) for the MLE pilots.  Using the score keeps the
    standardized index mu (W - X beta) / sigma standard normal for every
    pilot kind.
    """
    adj = fit.adjustments
    if adj.mu <= 0:
        raise DegenerateError("pilot adjustment mu is zero; index is undefined")
    xb = x @ fit.beta
    w = (xb - adj.gamma * pilot_score_residual(fit, x, y)) / adj.mu
    return IndexEstimate(w=w, varsigma2=adj.sigma2 / adj.mu ** 2)


def index_zscores(
    est: IndexEstimate, x: np.ndarray, beta: np.ndarray, fit: PilotFit
) -> np.ndarray:
    """Simulation diagnostic mu (W - X beta) / sigma against the true beta."""
    adj = fit.adjustments
    if adj.sigma2 <= 0:
        raise DegenerateError("pilot adjustment sigma is zero")
    return adj.mu * (est.w - x @ beta) / np.sqrt(adj.sigma2)
