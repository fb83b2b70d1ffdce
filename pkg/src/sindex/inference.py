"""Inferential-parameter estimation, t-statistics, intervals, and oracles.

Three estimation modes mirror the penalty used for the coefficient fit:
"ridge" (positive lambda), "unregularized" (no penalty), and "censored"
(no penalty, fitted indices clamped to a working window before entering
the adjustment formulas).
"""

import csv
import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

from ._linalg import adjustment_trace
from .errors import ConfigError, DegenerateError, InvalidDesignError

INFERENCE_MODES = ("ridge", "unregularized", "censored")


@dataclass(frozen=True)
class CensoredAdjustment:
    """Censoring window [lo, hi] and its clamp map."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError("censoring window needs lo < hi")

    def censor(self, z: np.ndarray) -> np.ndarray:
        return np.clip(z, self.lo, self.hi)


@dataclass(frozen=True)
class OracleParams:
    """Simulation-only inferential parameters computed from the true beta."""

    mu: float
    sigma: float


@dataclass(frozen=True)
class InferenceReport:
    mode: str
    alpha: float
    mu_hat: float
    sigma2_hat: float
    beta_hat: np.ndarray
    tau: np.ndarray
    t_stats: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    p_values: np.ndarray
    reject: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "alpha": self.alpha,
            "mu_hat": self.mu_hat,
            "sigma2_hat": self.sigma2_hat,
            "beta_hat": self.beta_hat.tolist(),
            "tau": self.tau.tolist(),
            "t_stats": self.t_stats.tolist(),
            "ci_lo": self.ci_lo.tolist(),
            "ci_hi": self.ci_hi.tolist(),
            "p_values": self.p_values.tolist(),
            "reject": self.reject.astype(bool).tolist(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["j", "beta_hat", "T", "ci_lo", "ci_hi", "p_value"])
            for j in range(len(self.beta_hat)):
                writer.writerow(
                    [
                        j + 1,
                        repr(float(self.beta_hat[j])),
                        repr(float(self.t_stats[j])),
                        repr(float(self.ci_lo[j])),
                        repr(float(self.ci_hi[j])),
                        repr(float(self.p_values[j])),
                    ]
                )


def vhat(
    x: np.ndarray,
    beta_hat: np.ndarray,
    gprime: Callable[[np.ndarray], np.ndarray],
    lam: float = 0.0,
    censor: Optional[CensoredAdjustment] = None,
) -> float:
    """n^{-1} tr(D - D X (X'DX + n lam I)^{-1} X'D), D = diag(g'(X beta)).

    The censored variant evaluates g' at the clamped fitted indices.
    """
    if lam < 0:
        raise ConfigError("lambda must be nonnegative")
    n = x.shape[0]
    z = x @ beta_hat
    if censor is not None:
        z = censor.censor(z)
    weights = np.asarray(gprime(z), dtype=float)
    return adjustment_trace(x, weights, n * lam) / n


def adjust_inferential(
    x: np.ndarray,
    y: np.ndarray,
    beta_hat: np.ndarray,
    g: Callable[[np.ndarray], np.ndarray],
    gprime: Callable[[np.ndarray], np.ndarray],
    mode: str = "unregularized",
    lam: float = 0.0,
    censor: Optional[CensoredAdjustment] = None,
) -> Tuple[float, float]:
    """Estimate the inferential bias mu and variance sigma^2 of beta_hat.

    ridge:          sigma^2 = kappa ||y - g(Xb)||^2 / (n (v + lam)^2),
                    mu = | ||b||^2 - sigma^2 |^{1/2}
    unregularized:  sigma^2 = kappa ||y - g(Xb)||^2 / (n v0^2),
                    mu = | ||Xb||^2/n - (1 - kappa) sigma^2 |^{1/2}
    censored:       as unregularized with the fitted indices clamped inside
                    every norm and weight.
    """
    n, p = x.shape
    kappa = p / n
    if mode == "ridge":
        if lam <= 0:
            raise ConfigError("ridge mode needs lambda > 0")
        v = vhat(x, beta_hat, gprime, lam=lam)
        if v + lam == 0:
            raise DegenerateError("v + lambda degenerated to zero")
        resid = y - g(x @ beta_hat)
        sigma2 = kappa * float(resid @ resid) / (n * (v + lam) ** 2)
        mu = float(np.sqrt(abs(float(beta_hat @ beta_hat) - sigma2)))
        return mu, sigma2
    if mode == "unregularized":
        v = vhat(x, beta_hat, gprime, lam=0.0)
        if v == 0:
            raise DegenerateError("v0 degenerated to zero")
        z = x @ beta_hat
        resid = y - g(z)
        sigma2 = kappa * float(resid @ resid) / (n * v ** 2)
        mu = float(np.sqrt(abs(float(z @ z) / n - (1.0 - kappa) * sigma2)))
        return mu, sigma2
    if mode == "censored":
        if censor is None:
            raise ConfigError("censored mode needs a censoring window")
        v = vhat(x, beta_hat, gprime, lam=0.0, censor=censor)
        if v == 0:
            raise DegenerateError("censored v0 degenerated to zero")
        z = censor.censor(x @ beta_hat)
        resid = y - g(z)
        sigma2 = kappa * float(resid @ resid) / (n * v ** 2)
        mu = float(np.sqrt(abs(float(z @ z) / n - (1.0 - kappa) * sigma2)))
        return mu, sigma2
    raise ConfigError(f"unknown inference mode {mode!r}; choose from {INFERENCE_MODES}")


def marginal_inference(
    beta_hat: np.ndarray,
    mu_hat: float,
    sigma2_hat: float,
    tau: np.ndarray,
    alpha: float = 0.05,
    null_values: Optional[np.ndarray] = None,
    mode: str = "unregularized",
) -> InferenceReport:
    """Coordinate-wise t-statistics, confidence intervals, and p-values.

    T_j = sqrt(p) tau_j (beta_j - mu b0_j) / sigma against null values b0;
    CI_j = mu^{-1} [beta_j -+ z sigma / (sqrt(p) tau_j)].
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    beta_hat = np.asarray(beta_hat, dtype=float)
    p = len(beta_hat)
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (p,):
        raise ConfigError("tau must have one entry per coordinate")
    if sigma2_hat <= 0:
        raise DegenerateError("sigma2_hat must be positive for inference")
    if mu_hat <= 0:
        raise DegenerateError("mu_hat must be positive for interval construction")
    if null_values is None:
        null_values = np.zeros(p)
    null_values = np.asarray(null_values, dtype=float)
    sigma = np.sqrt(sigma2_hat)
    sp = np.sqrt(p)
    t_stats = sp * tau * (beta_hat - mu_hat * null_values) / sigma
    z = float(ndtri(1.0 - alpha / 2.0))
    half = z * sigma / (sp * tau)
    ci_lo = (beta_hat - half) / mu_hat
    ci_hi = (beta_hat + half) / mu_hat
    p_values = 2.0 * (1.0 - ndtr(np.abs(t_stats)))
    reject = half <= np.abs(beta_hat)
    return InferenceReport(
        mode=mode,
        alpha=alpha,
        mu_hat=mu_hat,
        sigma2_hat=sigma2_hat,
        beta_hat=beta_hat,
        tau=tau,
        t_stats=t_stats,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        p_values=p_values,
        reject=reject,
    )


def oracle_params(
    beta_hat: np.ndarray, beta: np.ndarray, sigma: Optional[np.ndarray] = None
) -> OracleParams:
    """True-beta projections in whitened coordinates (simulation oracle).

    With theta = L' beta and theta_hat = L' beta_hat for the Cholesky factor
    L of Sigma: mu = theta'theta_hat / theta'theta and
    sigma = || theta_hat - mu theta ||.
    """
    beta = np.asarray(beta, dtype=float)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if sigma is None:
        theta, theta_hat = beta, beta_hat
    else:
        sigma = np.asarray(sigma, dtype=float)
        if np.max(np.abs(sigma - sigma.T)) > 1e-10:
            raise InvalidDesignError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as err:
            raise InvalidDesignError("covariance is not positive definite") from err
        theta = chol.T @ beta
        theta_hat = chol.T @ beta_hat
    denom = float(theta @ theta)
    if denom <= 0:
        raise ConfigError("true beta must have positive Sigma-norm")
    mu = float(theta @ theta_hat) / denom
    return OracleParams(mu=mu, sigma=float(np.linalg.norm(theta_hat - mu * theta)))


def effective_variance_oracle(beta_hat: np.ndarray, beta: np.ndarray) -> float:
    """Efficiency statistic b'b / (b'beta) - 1 for an estimator b."""
    inner = float(beta_hat @ beta)
    if inner == 0:
        raise DegenerateError("beta_hat is orthogonal to beta")
    return float(beta_hat @ beta_hat) / inner - 1.0


def effective_variance_estimated(mu_hat: float, sigma2_hat: float) -> float:
    """Estimated effective asymptotic variance sigma^2 / mu^2."""
    if mu_hat <= 0:
        raise DegenerateError("mu_hat must be positive")
    return sigma2_hat / mu_hat ** 2


def efficiency_condition_ridge(
    beta_hat: np.ndarray,
    vhat_lam: float,
    lam: float,
    resid_hat: np.ndarray,
    beta_tilde: np.ndarray,
    vtilde: float,
    lam1: float,
    resid_tilde: np.ndarray,
) -> float:
    """Ridge-mode efficiency diagnostic; a value above one certifies that the
    refit has smaller effective variance than the pilot (equal split sizes)."""
    return (
        np.linalg.norm(beta_hat)
        / np.linalg.norm(beta_tilde)
        * (abs(vhat_lam + lam) / abs(vtilde + lam1))
        * (np.linalg.norm(resid_tilde) / np.linalg.norm(resid_hat))
    )


def efficiency_condition_ls(
    xb_hat: np.ndarray,
    vhat0: float,
    resid_hat: np.ndarray,
    xb_tilde: np.ndarray,
    kappa1: float,
    resid_tilde: np.ndarray,
) -> float:
    """Unregularized efficiency diagnostic against a least-squares pilot."""
    return (
        np.linalg.norm(xb_hat)
        / np.linalg.norm(xb_tilde)
        * (abs(vhat0) / (1.0 - kappa1))
        * (np.linalg.norm(resid_tilde) / np.linalg.norm(resid_hat))
    )


def joint_transform(sigma: np.ndarray, coords: Sequence[int]) -> np.ndarray:
    """Whitening matrix for a finite coordinate set S.

    Returns M with M Theta_S M' = I (inverse of the Cholesky factor of the
    S-block of the precision matrix), so that
    M sqrt(p) (beta_hat_S - mu beta_S) / sigma is asymptotically standard
    normal.
    """
    sigma = np.asarray(sigma, dtype=float)
    coords = np.asarray(coords, dtype=int)
    if coords.ndim != 1 or len(coords) == 0:
        raise ConfigError("need a nonempty coordinate set")
    try:
        theta = np.linalg.inv(sigma)
    except np.linalg.LinAlgError as err:
        raise InvalidDesignError("covariance is not invertible") from err
    block = theta[np.ix_(coords, coords)]
    chol = np.linalg.cholesky(block)
    return np.linalg.inv(chol)
