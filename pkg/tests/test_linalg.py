import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gompcs.linalg import (
    ContractViolation,
    RankDeficientError,
    argmax_k,
    conj_transpose,
    l2_norm,
    least_squares_solve,
    matvec,
)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_conj_transpose_identity_and_scalar():
    np.testing.assert_array_equal(conj_transpose(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(conj_transpose([[1j]]), [[-1j]])


def test_conj_transpose_involution():
    m = crandn(np.random.default_rng(0), 2, 3)
    out = conj_transpose(m)
    assert out.shape == (3, 2)
    assert out[2, 1] == np.conj(m[1, 2])
    np.testing.assert_array_equal(conj_transpose(out), m)


def test_matvec_examples():
    v = np.array([1, 2j, -3, 4])
    np.testing.assert_array_equal(matvec(np.eye(4), v), v)
    np.testing.assert_array_equal(matvec(np.zeros((3, 3)), [1, 2, 3]), np.zeros(3))
    m = crandn(np.random.default_rng(1), 3, 2)
    np.testing.assert_allclose(matvec(m, [1, 2]), m[:, 0] + 2 * m[:, 1])


def test_matvec_dimension_mismatch():
    with pytest.raises(ContractViolation):
        matvec(np.eye(3), [1, 2])


def test_nonfinite_rejected():
    with pytest.raises(ContractViolation):
        matvec(np.eye(2), [1, np.nan])


def test_least_squares_identity():
    y = np.array([1, 2j, -3])
    np.testing.assert_allclose(least_squares_solve(np.eye(3), y), y, atol=1e-15)


def test_least_squares_mean():
    # normal equation 2 s = 1 + 3
    s = least_squares_solve([[1], [1]], [1, 3])
    np.testing.assert_allclose(s, [2.0], rtol=1e-14)


def test_least_squares_consistent_recovery():
    rng = np.random.default_rng(2)
    b = crandn(rng, 6, 3)
    s0 = crandn(rng, 3)
    s = least_squares_solve(b, b @ s0)
    assert np.linalg.norm(s - s0) / np.linalg.norm(s0) < 1e-10


def test_least_squares_matches_lstsq_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rows = rng.integers(2, 40)
        cols = rng.integers(1, rows + 1)
        b, y = crandn(rng, rows, cols), crandn(rng, rows)
        ref = np.linalg.lstsq(b, y, rcond=None)[0]
        np.testing.assert_allclose(least_squares_solve(b, y), ref, rtol=1e-8, atol=1e-10)


def test_least_squares_residual_orthogonality_500_systems():
    rng = np.random.default_rng(4)
    for _ in range(500):
        rows = int(rng.integers(1, 65))
        cols = int(rng.integers(1, rows + 1))
        b, y = crandn(rng, rows, cols), crandn(rng, rows)
        r = y - b @ least_squares_solve(b, y)
        inner = np.abs(b.conj().T @ r)
        bound = 1e-8 * np.linalg.norm(y) * np.linalg.norm(b, axis=0)
        assert np.all(inner < bound)


def test_least_squares_rank_deficient():
    b = np.array([[1, 2], [2, 4], [3, 6]], dtype=complex)
    with pytest.raises(RankDeficientError) as info:
        least_squares_solve(b, [1, 2, 3])
    assert info.value.rank == 1


def test_least_squares_wide_rejected():
    with pytest.raises(ContractViolation):
        least_squares_solve(np.ones((2, 3)), [1, 2])


def _brute_topk(mags, k):
    best = max(
        itertools.combinations(range(len(mags)), k),
        key=lambda c: (sum(mags[i] for i in c), [-i for i in c]),
    )
    return list(best)


def test_argmax_k_examples():
    assert argmax_k([0.1, 5.0, 2.0], 2).tolist() == _brute_topk([0.1, 5.0, 2.0], 2) == [1, 2]
    assert argmax_k([2, 2, 1], 1).tolist() == [0]
    assert argmax_k([3, 1, 2, 0], 4).tolist() == [0, 1, 2, 3]


def test_argmax_k_bad_k():
    with pytest.raises(ContractViolation):
        argmax_k([1, 2], 3)
    with pytest.raises(ContractViolation):
        argmax_k([1, 2], 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=30), st.data())
def test_argmax_k_properties(mags, data):
    k = data.draw(st.integers(1, len(mags)))
    idx = argmax_k(mags, k)
    assert len(set(idx.tolist())) == k
    assert all(0 <= i < len(mags) for i in idx)
    assert list(idx) == sorted(idx)
    rest = np.setdiff1d(np.arange(len(mags)), idx)
    if rest.size:
        assert min(mags[i] for i in idx) >= max(mags[i] for i in rest)


def test_l2_norm():
    assert l2_norm([3, 4j]) == pytest.approx(5.0, abs=1e-15)
    assert l2_norm(np.zeros(4)) == 0.0
    assert l2_norm([1]) == 1.0


def test_l2_norm_triangle_inequality():
    rng = np.random.default_rng(5)
    for _ in range(200):
        a, b = crandn(rng, 7), crandn(rng, 7)
        assert l2_norm(a + b) <= l2_norm(a) + l2_norm(b) + 1e-12
