"""Debiased index estimator."""

import numpy as np
import pytest

from sindex.debias import debias_index, index_zscores
from sindex.errors import DegenerateError
from sindex.pilot import Adjustments, PilotFit

rng = np.random.default_rng(55)


def _fit(beta, gamma=1.0, mu=2.0, sigma2=1.0, kind="ridge"):
    adj = Adjustments(v=0.5, gamma=gamma, mu=mu, sigma2=sigma2, kappa=0.5)
    return PilotFit(beta=np.asarray(beta, dtype=float), kind=kind, lam=1.0, adjustments=adj)


def test_hand_trace():
    x = np.array([[1.0], [0.0]])
    y = np.array([2.0, 1.0])
    est = debias_index(x, y, _fit([1.0]))
    assert np.allclose(est.w, [0.0, -0.5])
    assert est.varsigma2 == pytest.approx(0.25)


def test_zero_gamma_gives_scaled_index():
    x = rng.standard_normal((20, 3))
    fit = _fit(rng.normal(size=3), gamma=0.0)
    est = debias_index(x, rng.standard_normal(20), fit)
    assert np.allclose(est.w, x @ fit.beta / 2.0)


def test_exact_fit_gives_scaled_index():
    x = rng.standard_normal((20, 3))
    fit = _fit(rng.normal(size=3))
    y = x @ fit.beta
    est = debias_index(x, y, fit)
    assert np.allclose(est.w, y / 2.0)


def test_linearity_in_response():
    x = rng.standard_normal((15, 4))
    fit = _fit(rng.normal(size=4), gamma=0.7)
    y1 = rng.standard_normal(15)
    y2 = rng.standard_normal(15)
    w1 = debias_index(x, y1, fit).w
    w2 = debias_index(x, y2, fit).w
    w12 = debias_index(x, y1 + y2, fit).w
    base = debias_index(x, np.zeros(15), fit).w
    assert np.allclose(w12, w1 + w2 - base, atol=1e-12)


def test_degenerate_mu_raises():
    fit = _fit([1.0], mu=0.0)
    with pytest.raises(DegenerateError):
        debias_index(np.ones((2, 1)), np.ones(2), fit)


def test_zscores_zero_when_index_exact():
    x = rng.standard_normal((10, 2))
    beta = rng.normal(size=2)
    fit = _fit(beta)
    est = debias_index(x, x @ beta, fit)
    # force W == X beta by construction
    est = type(est)(w=x @ beta, varsigma2=est.varsigma2)
    assert np.allclose(index_zscores(est, x, beta, fit), 0.0)


def test_zscores_degenerate_sigma():
    fit = _fit([1.0], sigma2=0.0)
    est = debias_index(np.ones((2, 1)), np.ones(2), fit)
    with pytest.raises(DegenerateError):
        index_zscores(est, np.ones((2, 1)), np.array([1.0]), fit)


def test_mle_pilot_uses_score_residual():
    from scipy.special import expit

    x = rng.standard_normal((12, 3))
    beta = rng.normal(size=3)
    y = (rng.random(12) < 0.5).astype(float)
    fit = _fit(beta, gamma=0.8, kind="logit-mle")
    est = debias_index(x, y, fit)
    xb = x @ beta
    expected = (xb - 0.8 * (y - expit(xb))) / 2.0
    assert np.allclose(est.w, expected)


def test_pooled_zscores_normal(fig1_result):
    manifest, _, _ = fig1_result
    stats = manifest["summary"]["cubic"]
    assert stats["ks_distance"] < 0.08
    assert 0.8 <= stats["variance"] <= 1.2
