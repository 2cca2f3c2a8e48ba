import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tracesweep.direct import factorize, solve
from tracesweep.krylov import GmresConfig, gmres


def _krylov_oracle(A, b, k):
    """Minimal residual over span{b, Ab, ..., A^{k-1} b} by explicit least squares."""
    K = np.empty((b.size, k), dtype=complex)
    v = b / np.linalg.norm(b)
    for j in range(k):
        K[:, j] = v
        v = A @ v
        v /= np.linalg.norm(v)
    Q, _ = np.linalg.qr(K)
    y, *_ = np.linalg.lstsq(A @ Q, b, rcond=None)
    return np.linalg.norm(b - A @ (Q @ y)) / np.linalg.norm(b)


def test_zero_rhs(op12):
    res = gmres(lambda v: op12.matrix @ v.ravel(), np.zeros(op12.n))
    assert res.n_iter == 0 and res.converged and not np.any(res.x)


def test_matches_dense_oracle(op12, rng):
    A = op12.matrix.toarray()
    b = rng.standard_normal(op12.n) + 1j * rng.standard_normal(op12.n)
    res = gmres(lambda v: A @ v, b, cfg=GmresConfig(tol=1e-14, maxit=8))
    assert res.n_iter == 8 and not res.converged
    for k in range(1, 9):
        assert res.history[k] == pytest.approx(_krylov_oracle(A, b, k), rel=1e-8)
    assert np.linalg.norm(b - A @ res.x) / np.linalg.norm(b) == pytest.approx(res.residual, rel=1e-8)


def test_identity_preconditioner_is_plain_gmres(op12, rng):
    A = op12.matrix
    b = rng.standard_normal(op12.n)
    plain = gmres(lambda v: A @ v, b, cfg=GmresConfig(1e-8, 40))
    ident = gmres(lambda v: A @ v, b, lambda v: v.copy(), GmresConfig(1e-8, 40))
    np.testing.assert_allclose(plain.history, ident.history, rtol=1e-12)
    np.testing.assert_allclose(plain.x, ident.x, rtol=1e-10, atol=1e-14)


def test_exact_preconditioner_converges_in_one_step(op12, rng):
    A = op12.matrix
    F = factorize(op12)
    b = rng.standard_normal(op12.n)
    res = gmres(lambda v: A @ v, b, lambda v: solve(F, v), GmresConfig(1e-10, 10))
    assert res.converged and res.n_iter == 1
    assert np.linalg.norm(A @ res.x - b) / np.linalg.norm(b) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_history_non_increasing_and_true_residual(seed):
    r = np.random.default_rng(seed)
    n = 30
    A = np.eye(n) * 3 + r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
    b = r.standard_normal(n) + 1j * r.standard_normal(n)
    res = gmres(lambda v: A @ v, b, cfg=GmresConfig(1e-9, n))
    assert all(h2 <= h1 * (1 + 1e-12) for h1, h2 in zip(res.history, res.history[1:]))
    true = np.linalg.norm(b - A @ res.x) / np.linalg.norm(b)
    assert abs(true - res.residual) <= 1e-8 * max(true, 1e-300) + 1e-14


def test_maxit_report(op12, rng):
    A = op12.matrix
    b = rng.standard_normal(op12.n)
    res = gmres(lambda v: A @ v, b, cfg=GmresConfig(1e-12, 3))
    assert not res.converged and res.n_iter == 3 and len(res.history) == 4
    assert res.residual < res.history[0]


def test_breakdown_returns_subspace_solution():
    A = np.diag([1.0, 2.0, 3.0, 4.0])
    b = np.array([1.0, 1.0, 0.0, 0.0])
    res = gmres(lambda v: A @ v, b, cfg=GmresConfig(1e-30, 4))
    assert res.breakdown and res.converged and res.n_iter == 2
    np.testing.assert_allclose(res.x, [1.0, 0.5, 0.0, 0.0], atol=1e-13)


def test_initial_guess_and_config_errors(op12, rng):
    A = op12.matrix
    b = rng.standard_normal(op12.n)
    x = solve(factorize(op12), b)
    res = gmres(lambda v: A @ v, b, x0=x, cfg=GmresConfig(1e-8, 5))
    assert res.n_iter == 0 and res.converged
    with pytest.raises(ValueError):
        GmresConfig(tol=0.0)
    with pytest.raises(ValueError):
        GmresConfig(maxit=0)
