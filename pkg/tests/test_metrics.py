import math

import numpy as np
import pytest
from scipy.stats import norm

from conftest import random_spd
from gmsplit.errors import NotPositiveDefinite
from gmsplit.metrics import (MetricReport, cvm_marginals, cvm_norm, elk, madem, mcr, nise,
                             nise_table, sample_metrics, sample_table)
from gmsplit.mixture import GaussianMixture


def normal(mu, var, n=1):
    return GaussianMixture([1.0], [np.full(n, mu)], [np.eye(n) * var])


def test_nise_identical_is_zero(rng):
    p = GaussianMixture([0.3, 0.7], rng.standard_normal((2, 2)), [random_spd(rng, 2)] * 2)
    assert nise(p, p) == 0.0


def test_nise_disjoint_is_one():
    assert nise(normal(0, 1), normal(100, 1)) == pytest.approx(1.0, abs=1e-12)


def test_nise_closed_form_vs_quadrature():
    p, q = normal(0, 1), normal(0, 2)
    closed = (1 / math.sqrt(4 * math.pi) + 1 / math.sqrt(8 * math.pi)
              - 2 / math.sqrt(6 * math.pi)) / (1 / math.sqrt(4 * math.pi) + 1 / math.sqrt(8 * math.pi))
    x = np.linspace(-20, 20, 100_001)
    a, b = p.pdf(x[:, None]), q.pdf(x[:, None])
    quad = np.trapezoid((a - b) ** 2, x) / (np.trapezoid(a * a, x) + np.trapezoid(b * b, x))
    assert nise(p, q) == pytest.approx(closed, rel=1e-12)
    assert nise(p, q) == pytest.approx(quad, abs=1e-8)


def test_nise_symmetric_and_bounded(rng):
    for _ in range(20):
        p = GaussianMixture([0.5, 0.5], rng.standard_normal((2, 2)), [random_spd(rng, 2)] * 2)
        q = GaussianMixture([1.0], rng.standard_normal((1, 2)), [random_spd(rng, 2)])
        v = nise(p, q)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(nise(q, p), rel=1e-12)


def test_nise_pullback_truth_agrees_with_closed_form():
    from gmsplit.models import AffineModel
    from gmsplit.scenarios.truth import PullbackTruth
    from gmsplit.mixture import Gaussian

    A = np.array([[2.0, 0.5], [0.0, 1.0]])
    g = Gaussian([0.0, 0.0], np.diag([1.0, 0.5]))
    model = AffineModel(A)
    truth = PullbackTruth(g, model, None, lambda x: np.full(len(x), abs(np.linalg.det(A))))
    exact = GaussianMixture([1.0], [[0.0, 0.0]], [A @ g.cov @ A.T])
    p = GaussianMixture([0.5, 0.5], [[0.3, 0.0], [-0.3, 0.1]], [np.eye(2) * 1.5, np.eye(2)])
    assert nise(p, truth) == pytest.approx(nise(p, exact), abs=1e-6)


def test_cvm_quantile_minimum():
    n = 50
    z = norm.ppf((2 * np.arange(1, n + 1) - 1) / (2 * n))
    assert cvm_marginals(normal(0, 1), z[:, None])[0] == pytest.approx(1 / (12 * n * n), abs=1e-15)


def test_cvm_single_median():
    assert cvm_marginals(normal(0, 1), [[0.0]])[0] == pytest.approx(1 / 12)


def test_cvm_null_scale():
    rng = np.random.default_rng(2)
    n = 100_000
    w2 = cvm_marginals(normal(0, 1), rng.standard_normal((n, 1)))[0]
    assert w2 < 0.46 / n


def test_cvm_norm_combines_marginals():
    rng = np.random.default_rng(3)
    z = rng.standard_normal((500, 2))
    p = normal(0, 1, 2)
    assert cvm_norm(p, z) == pytest.approx(np.linalg.norm(cvm_marginals(p, z)))


def test_cvm_monotone_transform_invariance():
    # exp() applied to samples and to the marginal CDF argument leaves ω² unchanged
    rng = np.random.default_rng(4)
    z = rng.normal(0.2, 1.3, (1000, 1))
    p = normal(0.0, 1.0)
    direct = cvm_marginals(p, z)[0]
    y = np.sort(np.exp(z[:, 0]))
    F = norm.cdf(np.log(y))
    n = len(y)
    ref = 1 / (12 * n * n) + np.mean(((2 * np.arange(1, n + 1) - 1) / (2 * n) - F) ** 2)
    assert direct == pytest.approx(ref, rel=1e-12)


def test_madem_cases(rng):
    assert madem([1.0, 2.0], [1.0, 2.0], np.eye(2)) == 0.0
    P = random_spd(rng, 3)
    w, V = np.linalg.eigh(P)
    assert madem(np.sqrt(w[1]) * V[:, 1], np.zeros(3), P) == pytest.approx(1.0)
    d = rng.standard_normal(3)
    assert madem(d, 0 * d, P) == pytest.approx(math.sqrt(d @ np.linalg.inv(P) @ d), rel=1e-10)
    with pytest.raises(NotPositiveDefinite):
        madem([0.0], [1.0], [[-1.0]])


def test_mcr_cases(rng):
    P = random_spd(rng, 3)
    assert mcr(P, P) == pytest.approx(1.0)
    assert mcr(P, 4 * P) == pytest.approx(4.0)
    assert mcr(4 * P, P) == pytest.approx(4.0)
    Q = random_spd(rng, 3)
    assert mcr(P, Q) == pytest.approx(mcr(Q, P), rel=1e-10)
    T = rng.standard_normal((3, 3))
    assert mcr(T @ P @ T.T, T @ Q @ T.T) == pytest.approx(mcr(P, Q), rel=1e-9)
    assert mcr(P, Q) >= 1.0


def test_elk_standard_normal():
    rng = np.random.default_rng(6)
    z = rng.standard_normal((1_000_000, 1))
    p = normal(0, 1)
    vals = p.pdf(z)
    se = vals.std() / math.sqrt(len(z))
    assert abs(elk(p, z) - 1 / (2 * math.sqrt(math.pi))) < 3 * se


def test_elk_decays_with_shift():
    rng = np.random.default_rng(7)
    z = rng.standard_normal((1000, 1))
    p = normal(0, 1)
    assert elk(p, z) > elk(p, z + 5.0)
    assert elk(p, z + 1e3) == 0.0


def test_sample_metrics_switches():
    rng = np.random.default_rng(8)
    z = rng.standard_normal((5000, 2))
    p = normal(0.1, 1.2, 2)
    a = sample_metrics(p, z, "approx")
    b = sample_metrics(p, z, "mc")
    c = sample_metrics(p, z, "linear", np.eye(2))
    assert a["elk"] == b["elk"] and a["madem"] != b["madem"]
    assert c["madem"] > 0
    with pytest.raises(ValueError):
        sample_metrics(p, z, "linear")


def test_tables():
    reps = [MetricReport("s", "fos", nise=0.25), MetricReport("s", "sos", error="boom")]
    assert nise_table(reps) == "method,NISE\nfos,0.25\nsos,ERROR\n"
    reps = [MetricReport("s", "fos", elk=1.0, madem=2.0, mcr=3.0, cvm_norm=4.0)]
    assert sample_table(reps) == "method,ELK,MaDEM,MCR,CvMnorm\nfos,1,2,3,4\n"
