import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_irs_dm.errors import ConvergenceError, DimensionError, SymmetryError
from hybrid_irs_dm.numerics import (
    db_to_linear,
    dbm_to_watts,
    hermitian_max_eigenvalue,
    is_hermitian,
    linear_to_db,
    watts_to_dbm,
)

TOL = 1e-10


def random_psd(rng, n, rank=None):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    return g @ g.conj().T


@pytest.mark.parametrize(
    "a, expected",
    [(np.eye(3), 1.0), (np.diag([1.0, 4.0, 2.0]), 4.0)],
)
def test_max_eigenvalue_simple_matrices(a, expected):
    assert hermitian_max_eigenvalue(a) == pytest.approx(expected, rel=TOL)


def test_max_eigenvalue_rank_one():
    rng = np.random.default_rng(3)
    x = rng.normal(size=8) + 1j * rng.normal(size=8)
    x /= np.linalg.norm(x)
    a = np.outer(x, x.conj())
    lam = hermitian_max_eigenvalue(a, tol=TOL)
    assert abs(lam - 1.0) <= TOL
    assert abs(lam - np.real(np.vdot(x, a @ x))) <= TOL


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10), rank=st.integers(1, 10))
def test_max_eigenvalue_matches_eigh_and_dominates_rayleigh(seed, n, rank):
    rng = np.random.default_rng(seed)
    a = random_psd(rng, n, min(rank, n))
    lam = hermitian_max_eigenvalue(a, tol=TOL)
    ref = np.linalg.eigvalsh(a)[-1]
    assert abs(lam - ref) <= 1e-8 * ref
    xs = rng.normal(size=(100, n)) + 1j * rng.normal(size=(100, n))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    quad = np.real(np.einsum("ki,ij,kj->k", xs.conj(), a, xs))
    assert quad.max() <= lam * (1 + 1e-8)
    # lambda I - A is positive semidefinite up to the tolerance
    shifted = lam * (1 + 1e-8) * np.eye(n) - a
    np.linalg.cholesky(shifted + 1e-12 * lam * np.eye(n))


def test_max_eigenvalue_zero_matrix_and_orthogonal_start():
    assert hermitian_max_eigenvalue(np.zeros((3, 3))) == 0.0
    # all-ones start vector is in the null space of this matrix
    x = np.array([1.0, -1.0, 0.0]) / np.sqrt(2)
    assert hermitian_max_eigenvalue(np.outer(x, x)) == pytest.approx(1.0, rel=1e-9)


def test_max_eigenvalue_errors():
    with pytest.raises(DimensionError):
        hermitian_max_eigenvalue(np.ones((2, 3)))
    with pytest.raises(SymmetryError):
        hermitian_max_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))
    near_tie = np.diag([1.0, 1.0 - 1e-13, 0.5])
    rot = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))[0]
    with pytest.raises(ConvergenceError):
        hermitian_max_eigenvalue(rot @ near_tie @ rot.T, tol=1e-16, max_iter=3)


def test_is_hermitian_tolerance():
    a = np.array([[2.0, 1 + 1j], [1 - 1j, 3.0]])
    assert is_hermitian(a)
    b = a.copy()
    b[0, 1] += 1e-6
    assert not is_hermitian(b)


@pytest.mark.parametrize("dbm, watts", [(30.0, 1.0), (0.0, 1e-3), (-70.0, 1e-10)])
def test_dbm_to_watts(dbm, watts):
    assert dbm_to_watts(dbm) == pytest.approx(watts, rel=1e-14)


@pytest.mark.parametrize("db, lin", [(0.0, 1.0), (-30.0, 1e-3), (-70.0, 1e-7)])
def test_db_to_linear(db, lin):
    assert db_to_linear(db) == pytest.approx(lin, rel=1e-14)


def test_dbm_is_db_shifted_by_thirty():
    xs = np.random.default_rng(1).uniform(-120, 60, 50)
    for x in xs:
        assert dbm_to_watts(x) == pytest.approx(db_to_linear(x - 30), rel=1e-14)


@given(st.floats(-150, 80))
def test_conversions_round_trip(x):
    assert watts_to_dbm(dbm_to_watts(x)) == pytest.approx(x, abs=1e-9)
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


def test_purity():
    a = random_psd(np.random.default_rng(5), 6)
    assert hermitian_max_eigenvalue(a) == hermitian_max_eigenvalue(a.copy())
