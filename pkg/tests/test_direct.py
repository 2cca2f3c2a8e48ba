import numpy as np
import pytest
import scipy.sparse as sp

from tracesweep.direct import factorize, nested_dissection, solve
from tracesweep.errors import SingularMatrixError

from conftest import pml_operator

METHODS = ["superlu", "multifrontal"]


def test_one_by_one():
    f = factorize(sp.csr_matrix(np.array([[2.0 + 0j]])))
    np.testing.assert_allclose(solve(f, np.array([3.0])), [1.5])


def test_identity():
    f = factorize(sp.identity(10, format="csr"))
    b = np.arange(10) + 1j
    np.testing.assert_array_equal(solve(f, b), b)


@pytest.mark.parametrize("method", METHODS)
def test_residual_on_12x12_pml_operator(op12, rng, method):
    f = factorize(op12, method=method)
    b = rng.standard_normal(op12.n) + 1j * rng.standard_normal(op12.n)
    x = solve(f, b)
    assert np.linalg.norm(op12.matrix @ x - b) / np.linalg.norm(b) <= 1e-10


@pytest.mark.parametrize("method", METHODS)
def test_forward_multiply_oracle(op12, rng, method):
    x = rng.standard_normal(op12.n) + 1j * rng.standard_normal(op12.n)
    got = solve(factorize(op12, method=method), op12.matrix @ x)
    assert np.linalg.norm(got - x) / np.linalg.norm(x) <= 1e-10


@pytest.mark.parametrize("method", METHODS)
def test_zero_rhs_and_determinism(op12, rng, method):
    f = factorize(op12, method=method)
    assert not np.any(solve(f, np.zeros(op12.n)))
    b = rng.standard_normal(op12.n) + 0j
    np.testing.assert_array_equal(solve(f, b), solve(f, b))


@pytest.mark.parametrize("method", METHODS)
def test_block_and_field_rhs(op12, rng, method):
    f = factorize(op12, method=method)
    B = rng.standard_normal((op12.n, 3)) + 0j
    X = solve(f, B)
    assert X.shape == B.shape
    for k in range(3):
        np.testing.assert_allclose(X[:, k], solve(f, B[:, k]), rtol=1e-12, atol=1e-14)
    field = B[:, 0].reshape(op12.shape)
    assert solve(f, field).shape == op12.shape


def test_backends_agree_in_3d(rng):
    op = pml_operator(3, 6, 3)
    b = rng.standard_normal(op.n) + 0j
    x1 = solve(factorize(op, method="superlu"), b)
    x2 = solve(factorize(op, method="multifrontal"), b)
    assert np.linalg.norm(x1 - x2) / np.linalg.norm(x1) < 1e-10


def test_auto_picks_multifrontal_in_3d():
    from tracesweep.direct import MultifrontalLU
    assert isinstance(factorize(pml_operator(3, 5, 2)).backend, MultifrontalLU)
    assert not isinstance(factorize(pml_operator(2, 5, 2)).backend, MultifrontalLU)


def test_length_mismatch(op12):
    f = factorize(op12)
    with pytest.raises(ValueError):
        solve(f, np.zeros(op12.n - 1))


@pytest.mark.parametrize("method", METHODS)
def test_singular_matrix_names_pivot(method):
    # a 1D Laplacian with a zero row in the middle of a 4x4 grid
    n = 16
    M = sp.lil_matrix((n, n), dtype=complex)
    for i in range(n):
        M[i, i] = 2.0
    M[5, 5] = 0.0
    with pytest.raises(SingularMatrixError) as info:
        factorize(M.tocsr(), shape=(4, 4), method=method)
    assert "pivot" in str(info.value)
    if method == "multifrontal":
        assert info.value.pivot == 5


def test_nested_dissection_is_permutation():
    for shape in [(7, 9), (17, 17), (5, 6, 7)]:
        p = nested_dissection(shape)
        np.testing.assert_array_equal(np.sort(p), np.arange(np.prod(shape)))


def test_fill_reported(op12):
    f = factorize(op12)
    assert f.fill > op12.matrix.nnz // 2
    assert f.memory_bytes == f.fill * 20
    assert f.seconds >= 0.0


def test_unknown_method(op12):
    with pytest.raises(ValueError):
        factorize(op12, method="cholesky")
