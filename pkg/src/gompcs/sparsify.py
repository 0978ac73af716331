"""Hard thresholding of transform-domain spectra relative to their peak modulus."""
from dataclasses import dataclass

import numpy as np

from .linalg import ContractViolation

__all__ = [
    "SparseVector",
    "SparsifyReport",
    "sparsify",
    "sparsity_level",
    "sparsity_ratio",
    "calibrate_threshold",
]

T_RESOLUTION = 1e-6


@dataclass(frozen=True)
class SparseVector:
    values: np.ndarray
    kappa: int


@dataclass(frozen=True)
class SparsifyReport:
    threshold_T: float
    kappa: int
    sparsity_ratio: float


def sparsity_level(x):
    return int(np.count_nonzero(np.asarray(x)))


def sparsity_ratio(x):
    x = np.asarray(x)
    return 100.0 * (x.size - np.count_nonzero(x)) / x.size


def _keep_mask(mod, T):
    # entries strictly below the cut are dropped, so ties with it survive
    return ~(mod < (T / 100.0) * mod.max())


def sparsify(x, T):
    """Zero every entry with ``|x| < T/100 * max|x|``.

    Returns ``(SparseVector, SparsifyReport)``. Surviving entries are copied
    unchanged.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or x.size == 0:
        raise ContractViolation("sparsify expects a nonempty 1-D vector")
    if not 0.0 <= T <= 100.0:
        raise ContractViolation(f"threshold T must lie in [0, 100], got {T}")
    out = x.copy()
    mod = np.abs(x)
    if mod.max() > 0:
        out[~_keep_mask(mod, T)] = 0.0
    kappa = sparsity_level(out)
    n = out.size
    return SparseVector(out, kappa), SparsifyReport(float(T), kappa, 100.0 * (n - kappa) / n)


def _kappa_at(mod, T):
    return int(np.count_nonzero(_keep_mask(mod, T) & (mod > 0)))


def calibrate_threshold(x, kappa_target):
    """Smallest T (to 1e-6 percent) whose sparsification leaves at most
    ``kappa_target`` nonzeros."""
    mod = np.abs(np.asarray(x, dtype=complex))
    nnz = int(np.count_nonzero(mod))
    if not 1 <= kappa_target <= nnz:
        raise ContractViolation(f"kappa_target must lie in [1, {nnz}], got {kappa_target}")
    if _kappa_at(mod, 0.0) <= kappa_target:
        return 0.0
    if _kappa_at(mod, 100.0) > kappa_target:
        raise ContractViolation(
            f"kappa_target={kappa_target} unreachable: {_kappa_at(mod, 100.0)} entries tie at the peak"
        )
    # kappa(T) is a non-increasing step function; its jump sits at
    # 100 * (kappa_target+1)-th largest modulus / max, so start the bracket there
    ranked = np.sort(mod)[::-1]
    start = 100.0 * ranked[kappa_target] / ranked[0]
    lo, hi = max(0.0, start - 1e-3), min(100.0, start + 1e-3)
    if _kappa_at(mod, lo) <= kappa_target:
        lo = 0.0
    if _kappa_at(mod, hi) > kappa_target:
        hi = 100.0
    while hi - lo > T_RESOLUTION:
        mid = 0.5 * (lo + hi)
        if _kappa_at(mod, mid) <= kappa_target:
            hi = mid
        else:
            lo = mid
    return hi
