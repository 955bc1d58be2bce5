import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from polyrigid.algebra import (
    J,
    MINOR_INDICES,
    Stacked62,
    all_minors,
    cof,
    cof_t,
    det,
    det2,
    minor_det,
    rank_one_gap,
)
from polyrigid.inclusion import lift
from polyrigid.integrand import get_integrand

mat2 = arrays(np.float64, (2, 2), elements=st.floats(-10, 10))


@pytest.mark.parametrize(
    "M, expected",
    [
        (np.eye(2), 1.0),
        ([[1, 1], [0, 1]], 1.0),
        (J, 1.0),
        (np.diag([2.0, 3.0, 4.0]), 24.0),
        (np.eye(4), 1.0),
    ],
)
def test_det_known_values(M, expected):
    assert det(M) == expected


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.eye(5), np.eye(1), [[np.nan, 0], [0, 1]]])
def test_det_rejects_bad_shapes(bad):
    with pytest.raises(ValueError):
        det(bad)


def test_cof_t_identity():
    np.testing.assert_array_equal(cof_t(np.eye(2)), np.eye(2))
    np.testing.assert_array_equal(cof_t(np.eye(3)), np.eye(3))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cofactor_adjugate_identity(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        M = rng.uniform(-10, 10, size=(n, n))
        np.testing.assert_allclose(M @ cof(M), det(M) * np.eye(n), atol=1e-8 * 10 ** (n - 2))
        np.testing.assert_allclose(cof(M), det(M) * np.linalg.inv(M), rtol=1e-6, atol=1e-6)


@settings(max_examples=200, deadline=None)
@given(mat2)
def test_rotation_commutes_with_cofactor(X):
    np.testing.assert_allclose(cof_t(X) @ J, J @ X, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(mat2, mat2)
def test_det_multiplicative(M, N):
    assert abs(det(M @ N) - det(M) * det(N)) <= 1e-9 * (1 + abs(det(M) * det(N)))


def test_det2_vectorised_matches_scalar():
    rng = np.random.default_rng(0)
    Ms = rng.normal(size=(7, 3, 2, 2))
    expected = np.array([[det(m) for m in row] for row in Ms])
    np.testing.assert_allclose(det2(Ms), expected, atol=1e-14)


def test_minor_det_of_lifted_identity():
    A = lift(get_integrand("quad"), np.eye(2)).value
    assert minor_det(A, (1, 2)) == 1.0
    # row 3 is twice row 1
    assert minor_det(A, (1, 3)) == 0.0


@pytest.mark.parametrize("idx", [(0, 1), (2, 2), (3, 1), (1, 7)])
def test_minor_det_bad_index(idx):
    with pytest.raises(ValueError):
        minor_det(np.zeros((6, 2)), idx)


def test_all_minors_order():
    assert len(MINOR_INDICES) == 15
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 2))
    mins = all_minors(A)
    for k, (i, j) in enumerate(MINOR_INDICES):
        assert mins[k] == pytest.approx(np.linalg.det(A[[i - 1, j - 1]]), abs=1e-12)


def test_stacked62_round_trip():
    A = np.arange(12.0).reshape(6, 2)
    S = Stacked62.from_array(A)
    np.testing.assert_array_equal(np.asarray(S), A)
    np.testing.assert_array_equal((S - S).array, np.zeros((6, 2)))
    with pytest.raises(ValueError):
        Stacked62.from_array(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        S.top[0, 0] = 1.0


@pytest.mark.parametrize(
    "A, B, rank",
    [
        (np.eye(2), np.eye(2), 0),
        (np.eye(2), [[1, 1], [0, 1]], 1),
        (np.eye(2), 2 * np.eye(2), 2),
        (np.eye(2), np.diag([2.0, 0.5]), 2),
    ],
)
def test_rank_one_gap_rank(A, B, rank):
    assert rank_one_gap(A, B)[0] == rank


def test_rank_one_gap_factors():
    rank, (a, n) = rank_one_gap(np.eye(2), [[1, 1], [0, 1]])
    assert rank == 1
    np.testing.assert_allclose(a, [1, 0], atol=1e-15)
    np.testing.assert_allclose(n, [0, 1], atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(mat2, arrays(np.float64, 2, elements=st.floats(-5, 5)), arrays(np.float64, 2, elements=st.floats(-5, 5)))
def test_rank_one_gap_reconstructs(A, a, n):
    B = A + np.outer(a, n)
    rank, factors = rank_one_gap(A, B)
    if rank == 1:
        fa, fn = factors
        assert np.linalg.norm(fn) == pytest.approx(1.0)
        np.testing.assert_allclose(np.outer(fa, fn), B - A, atol=1e-10)
    else:
        assert rank == 0
