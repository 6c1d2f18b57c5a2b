import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrocert.errors import InputError
from hydrocert.linalg import eigenvalues_sym, is_psd, jacobi_eigh, min_eigenvalue, try_cholesky


def random_sym(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


def test_two_by_two():
    assert np.allclose(eigenvalues_sym([[2, 1], [1, 2]]), [1, 3], atol=1e-14)


def test_identity():
    assert np.allclose(eigenvalues_sym(np.eye(3)), [1, 1, 1])


def test_against_characteristic_polynomial_roots():
    rng = np.random.default_rng(1)
    A = random_sym(rng, 6)
    roots = np.sort(np.roots(np.poly(A)).real)
    assert np.allclose(eigenvalues_sym(A), roots, atol=1e-8)


def test_reconstruction():
    rng = np.random.default_rng(2)
    for n in (1, 2, 5, 9, 16):
        A = random_sym(rng, n)
        w, V = eigenvalues_sym(A, vectors=True)
        err = np.linalg.norm(A - V @ np.diag(w) @ V.T)
        assert err <= 1e-10 * (1 + np.linalg.norm(A))
        assert np.allclose(V.T @ V, np.eye(n), atol=1e-12)
        assert np.all(np.diff(w) >= 0)


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.diag([3.0, -2.0, 5.0])) == pytest.approx(-2.0)
    assert min_eigenvalue([[1, 1], [1, 1]]) == pytest.approx(0.0, abs=1e-15)
    M = [[0.4, 0.5, 0], [0.5, 0.4, 0], [0, 0, 0.4]]
    assert min_eigenvalue(M) == pytest.approx(-0.1, abs=1e-14)


def test_is_psd_tolerance():
    assert is_psd(np.eye(4), 0.0)
    assert is_psd(np.diag([1.0, -1e-12]), 1e-9)
    assert not is_psd(np.diag([1.0, -1e-6]), 1e-9)
    with pytest.raises(InputError):
        is_psd(np.eye(2), -1.0)


@pytest.mark.parametrize("bad", [[[np.nan, 0], [0, 1]], [[np.inf]], np.zeros((2, 3)), np.zeros((0, 0))])
def test_rejects_bad_input(bad):
    with pytest.raises(InputError):
        eigenvalues_sym(bad)


def test_is_psd_agrees_with_shifted_cholesky():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        B = rng.standard_normal((n, n))
        # mix clearly definite, clearly indefinite and near-singular cases
        kind = rng.integers(3)
        if kind == 0:
            A = B @ B.T + 0.1 * np.eye(n)
        elif kind == 1:
            A = random_sym(rng, n)
        else:
            A = B[:, : n - 1] @ B[:, : n - 1].T
        tol = 1e-9
        chol_ok = try_cholesky(A, shift=tol * 1.01) is not None
        lam = min_eigenvalue(A)
        if abs(lam + tol) > 1e-10:  # skip cases within rounding of the threshold
            assert is_psd(A, tol) == chol_ok


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_trace_invariant(n, seed):
    A = random_sym(np.random.default_rng(seed), n) * 10
    w = eigenvalues_sym(A)
    tr = np.trace(A)
    assert abs(w.sum() - tr) <= 1e-9 * (1 + abs(tr))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    A = random_sym(rng, n)
    P = np.eye(n)[rng.permutation(n)]
    assert np.allclose(eigenvalues_sym(A), eigenvalues_sym(P @ A @ P.T), atol=1e-11)


def test_tiny_off_diagonal_does_not_overflow():
    A = np.array([[1e10, 1e-310], [1e-310, -1e10]])
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        w, _ = jacobi_eigh(A)
    assert np.allclose(w, [-1e10, 1e10])
