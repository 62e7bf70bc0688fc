import numpy as np
import pytest

from conftest import random_spd
from gmsplit.errors import DowndateViolation, NotPositiveDefinite
from gmsplit.linalg import (cholesky, cholesky_downdate, clamp_psd, directional_reciprocal_precision,
                            downdate_threshold, generalized_sym_eig, is_psd, mahalanobis_sq,
                            rank1_downdate, whiten)


def test_cholesky_identity_and_diagonal():
    assert np.array_equal(cholesky(np.eye(3)), np.eye(3))
    assert np.allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_cholesky_reconstructs(rng):
    for _ in range(20):
        P = random_spd(rng, 5)
        L = cholesky(P)
        assert np.allclose(L, np.tril(L))
        assert np.linalg.norm(L @ L.T - P) < 1e-12 * np.linalg.norm(P) * 10


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.diag([1.0, np.nan]))


def test_cholesky_symmetrizes_input():
    P = np.array([[2.0, 1.0 + 1e-13], [1.0, 2.0]])
    L = cholesky(P)
    assert np.allclose(L @ L.T, 0.5 * (P + P.T))


def test_downdate_trivial_cases():
    assert np.array_equal(rank1_downdate(np.eye(2), [1, 0], 0.0), np.eye(2))
    assert np.allclose(rank1_downdate(np.eye(2), [1, 0], 1.0), np.diag([0.0, 1.0]))


def test_downdate_violation_above_threshold():
    # threshold 1/(e1ᵀ diag(1/4, 1) e1) = 4
    assert downdate_threshold(np.diag([4.0, 1.0]), [1, 0]) == pytest.approx(4.0)
    with pytest.raises(DowndateViolation):
        rank1_downdate(np.diag([4.0, 1.0]), [1, 0], 5.0)


def test_downdate_normalises_direction():
    out = rank1_downdate(np.eye(2), [3.0, 0.0], 0.5)
    assert np.allclose(out, np.diag([0.5, 1.0]))


def test_downdate_negative_alpha():
    with pytest.raises(ValueError):
        rank1_downdate(np.eye(2), [1, 0], -1.0)


def test_downdate_psd_iff_below_threshold(rng):
    # straddle the threshold on seeded cases and check the sign of the smallest eigenvalue
    for _ in range(1000):
        n = rng.integers(2, 6)
        P = random_spd(rng, n, cond=100.0)
        v = rng.standard_normal(n)
        a_star = downdate_threshold(P, v)
        vh = v / np.linalg.norm(v)
        below = np.linalg.eigvalsh(P - 0.999 * a_star * np.outer(vh, vh)).min()
        above = np.linalg.eigvalsh(P - 1.001 * a_star * np.outer(vh, vh)).min()
        assert below > 0 > above


def test_reciprocal_precision_examples(rng):
    for n in (1, 2, 5):
        d = rng.standard_normal(n)
        assert directional_reciprocal_precision(np.eye(n), d) == pytest.approx(1.0)
    P = 250.0**2 * np.diag([16.0, 1.0])
    assert directional_reciprocal_precision(P, [1, 0]) == pytest.approx(250.0**2 * 16)


def test_reciprocal_precision_matches_inverse(rng):
    for _ in range(50):
        P = random_spd(rng, 4, cond=1e3)
        d = rng.standard_normal(4)
        d /= np.linalg.norm(d)
        ref = 1.0 / (d @ np.linalg.inv(P) @ d)
        assert directional_reciprocal_precision(P, d) == pytest.approx(ref, rel=1e-10)


def test_harmonic_arithmetic_inequality(rng):
    for _ in range(200):
        P = random_spd(rng, 3, cond=50.0)
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        assert directional_reciprocal_precision(P, d) <= d @ P @ d * (1 + 1e-12)
    # equality on eigenvectors
    w, V = np.linalg.eigh(P)
    for k in range(3):
        assert directional_reciprocal_precision(P, V[:, k]) == pytest.approx(V[:, k] @ P @ V[:, k])


def test_cholesky_downdate_matches_dense(rng):
    for _ in range(50):
        P = random_spd(rng, 4)
        v = rng.standard_normal(4)
        a = 0.7 * downdate_threshold(P, v)
        x = np.sqrt(a) * v / np.linalg.norm(v)
        L2 = cholesky_downdate(cholesky(P), x)
        assert np.allclose(L2 @ L2.T, P - np.outer(x, x), atol=1e-10)


def test_cholesky_downdate_boundary_singular():
    L2 = cholesky_downdate(np.eye(2), [1.0, 0.0])
    assert np.allclose(L2 @ L2.T, np.diag([0.0, 1.0]))
    with pytest.raises(DowndateViolation):
        cholesky_downdate(np.eye(2), [1.1, 0.0])


def test_is_psd_and_clamp():
    assert is_psd(np.diag([1.0, 0.0]))
    assert not is_psd(np.diag([1.0, -0.1]))
    c = clamp_psd(np.diag([1.0, -1e-14]))
    assert np.linalg.eigvalsh(c).min() >= 0.0
    with pytest.raises(NotPositiveDefinite):
        clamp_psd(np.diag([1.0, -0.1]))


def test_generalized_eig_identity_and_equal():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    sol = generalized_sym_eig(A, np.eye(2))
    assert np.allclose(sol.eigenvalues, np.sort(np.linalg.eigvalsh(A))[::-1])
    sol = generalized_sym_eig(np.diag([2.0, 1.0]), np.diag([2.0, 1.0]))
    assert np.allclose(sol.eigenvalues, [1.0, 1.0])


def test_generalized_eig_residual_and_orthonormality(rng):
    for _ in range(30):
        A = rng.standard_normal((4, 4))
        A = A + A.T
        B = random_spd(rng, 4, cond=100.0)
        sol = generalized_sym_eig(A, B)
        assert np.all(np.diff(sol.eigenvalues) <= 0)
        for lam, v in zip(sol.eigenvalues, sol.eigenvectors.T):
            assert np.linalg.norm(A @ v - lam * B @ v) < 1e-8 * np.linalg.norm(A)
        V = sol.eigenvectors
        assert np.allclose(V.T @ B @ V, np.eye(4), atol=1e-8)


def test_generalized_eig_rejects_indefinite_b():
    with pytest.raises(NotPositiveDefinite):
        generalized_sym_eig(np.eye(2), np.diag([1.0, -1.0]))


def test_whiten_examples(rng):
    w = whiten(np.eye(2))
    assert np.allclose(w.forward_matrix, np.eye(2))
    assert np.allclose(whiten(np.diag([4.0, 1.0])).forward_matrix, np.diag([0.5, 1.0]))
    P = random_spd(rng, 3, cond=1e4)
    w = whiten(P)
    for _ in range(100):
        x = rng.standard_normal(3)
        assert np.allclose(w.inverse(w.forward(x)), x, rtol=1e-10, atol=1e-12)
        y = w.forward(x)
        assert y @ y == pytest.approx(x @ np.linalg.solve(P, x), rel=1e-10)
        assert mahalanobis_sq(x, P) == pytest.approx(y @ y)


def test_whitened_samples_have_identity_covariance(rng):
    P = random_spd(rng, 3)
    xs = rng.multivariate_normal(np.zeros(3), P, size=200_000)
    ys = whiten(P).forward(xs.T).T
    assert np.allclose(np.cov(ys.T), np.eye(3), atol=0.02)
