import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gompcs.linalg import ContractViolation
from gompcs.sparsify import (
    calibrate_threshold,
    sparsify,
    sparsity_level,
    sparsity_ratio,
)

X = np.array([10, 1, 0.4, -0.2], dtype=complex)


def test_sparsify_hand_example():
    sv, rep = sparsify(X, 5)
    np.testing.assert_array_equal(sv.values, [10, 1, 0, 0])
    assert sv.kappa == rep.kappa == 2
    assert rep.sparsity_ratio == 50.0


def test_sparsify_t0_unchanged():
    x = np.array([3, 0, 1e-300, -2j])
    sv, rep = sparsify(x, 0)
    np.testing.assert_array_equal(sv.values, x)
    assert rep.kappa == 3


def test_sparsify_t100_equal_moduli():
    x = np.array([1, -1, 1j, -1j])
    sv, _ = sparsify(x, 100)
    np.testing.assert_array_equal(sv.values, x)


def test_sparsify_all_zero():
    sv, rep = sparsify(np.zeros(5), 30)
    assert rep.kappa == 0 and rep.sparsity_ratio == 100.0


def test_sparsify_rejects_bad_T():
    with pytest.raises(ContractViolation):
        sparsify(X, 101)
    with pytest.raises(ContractViolation):
        sparsify(X, -1)


def test_sparsity_level_and_ratio():
    assert sparsity_level(np.zeros(8)) == 0
    assert sparsity_level([1, 0, 2j, 0]) == 2
    assert sparsity_ratio(np.zeros(4)) == 100.0
    assert sparsity_ratio([1, 2, 3]) == 0.0
    assert sparsity_ratio([1, 0, 2, 0]) == 50.0
    sv, rep = sparsify(X, 3)
    assert sparsity_level(sv.values) == rep.kappa


complex_vecs = arrays(
    np.complex128, st.integers(1, 40),
    elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=200, deadline=None)
@given(complex_vecs, st.floats(0, 100), st.floats(0, 100))
def test_sparsify_invariants(x, t1, t2):
    t1, t2 = sorted((t1, t2))
    a, ra = sparsify(x, t1)
    b, rb = sparsify(x, t2)
    assert ra.sparsity_ratio <= rb.sparsity_ratio
    # conservation
    assert a.kappa + np.count_nonzero(a.values == 0) == x.size
    # idempotence
    again, _ = sparsify(a.values, t1)
    np.testing.assert_array_equal(again.values, a.values)
    # survivors are untouched, peak survives
    keep = a.values != 0
    np.testing.assert_array_equal(a.values[keep], x[keep])
    if np.abs(x).max() > 0:
        assert a.values[np.argmax(np.abs(x))] != 0


def test_calibrate_full_kappa_is_zero():
    assert calibrate_threshold(X, 4) == 0.0


def test_calibrate_hand_breakpoints():
    T = calibrate_threshold(X, 2)
    assert 4 < T <= 10
    assert sparsify(X, T)[1].kappa <= 2
    assert sparsify(X, T - 1e-6)[1].kappa > 2


def test_calibrate_rejects_unreachable():
    with pytest.raises(ContractViolation):
        calibrate_threshold(X, 5)
    with pytest.raises(ContractViolation):
        calibrate_threshold(X, 0)


def test_calibrate_monotone_sweep():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    ts = [calibrate_threshold(x, k) for k in range(1, 31)]
    assert all(a >= b for a, b in zip(ts, ts[1:]))
    for k, T in enumerate(ts, start=1):
        assert sparsify(x, T)[1].kappa <= k
        if T > 0:
            assert sparsify(x, T - 1e-6)[1].kappa > k
