"""PSNR and SSIM quality metrics, band-averaged over hyperspectral cubes."""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .linalg import ContractViolation

__all__ = [
    "SsiParams",
    "QualityReport",
    "PerfReport",
    "DegenerateReferenceWarning",
    "mse",
    "psnr",
    "ssi",
    "ssi_raw",
    "ssi_1d",
    "ssi_1d_raw",
    "stack_complex",
    "bandwise_average",
    "bandwise_quality",
    "psnr_ssi_1d",
    "PSNR_CAP_DB",
]

PSNR_CAP_DB = 300.0


class DegenerateReferenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SsiParams:
    window_2d: int = 8
    window_1d: int = 11
    k1: float = 0.01
    k2: float = 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssi: float
    ssi_raw: float = float("nan")
    capped_bands: int = 0

    def as_pair(self):
        return f"{self.psnr_db:.2f}/{self.ssi:.2f}"


@dataclass(frozen=True)
class PerfReport:
    total_iterations_J: int
    recovery_time_t: float
    pixels_recovered: int
    pixels_failed: int


def _pair(a, ref):
    a = np.asarray(a, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if a.shape != ref.shape:
        raise ContractViolation(f"shape mismatch: {a.shape} vs {ref.shape}")
    if a.size == 0:
        raise ContractViolation("metrics need nonempty inputs")
    return a, ref


def stack_complex(v):
    """Real-valued view of a complex vector: real parts then imaginary parts."""
    v = np.asarray(v)
    return np.concatenate([v.real.ravel(), v.imag.ravel()]) if np.iscomplexobj(v) else v


def mse(a, ref):
    a, ref = _pair(a, ref)
    return float(np.mean((a - ref) ** 2))


def psnr(a, ref):
    """``10 log10(R^2 / MSE)`` with ``R = max(ref)``.

    +inf when the inputs are equal; -inf (with a warning) when ``R == 0``
    but the inputs differ.
    """
    err = mse(a, ref)
    if err == 0.0:
        return math.inf
    peak = float(np.max(np.asarray(ref, dtype=float)))
    if peak == 0.0:
        warnings.warn("reference maximum is 0; PSNR is -inf", DegenerateReferenceWarning, stacklevel=2)
        return -math.inf
    return 10.0 * math.log10(peak * peak / err)


def _stabilizers(a, ref, params):
    dyn = float(np.ptp(ref))
    if dyn == 0.0:
        # flat reference: fall back to its magnitude so C1, C2 stay positive
        dyn = float(max(np.max(np.abs(ref)), np.max(np.abs(a)))) or 1.0
    return (params.k1 * dyn) ** 2, (params.k2 * dyn) ** 2


def _ssim_windows(a, ref, window_shape, c1, c2):
    wa = sliding_window_view(a, window_shape)
    wr = sliding_window_view(ref, window_shape)
    axes = tuple(range(a.ndim, 2 * a.ndim))
    mu_a = wa.mean(axis=axes)
    mu_r = wr.mean(axis=axes)
    var_a = (wa * wa).mean(axis=axes) - mu_a * mu_a
    var_r = (wr * wr).mean(axis=axes) - mu_r * mu_r
    cov = (wa * wr).mean(axis=axes) - mu_a * mu_r
    num = (2 * mu_a * mu_r + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_r * mu_r + c1) * (var_a + var_r + c2)
    return float(np.mean(num / den))


def ssi_raw(a, ref, params=SsiParams()):
    """Unclamped SSIM of a 2-D band, uniform windows with stride 1.

    A window side longer than the image is cut to the image size.
    """
    a, ref = _pair(a, ref)
    if a.ndim != 2:
        raise ContractViolation(f"ssi expects 2-D bands, got {a.ndim}-D")
    window = tuple(min(params.window_2d, d) for d in a.shape)
    return _ssim_windows(a, ref, window, *_stabilizers(a, ref, params))


def ssi(a, ref, params=SsiParams()):
    return min(1.0, max(0.0, ssi_raw(a, ref, params)))


def ssi_1d_raw(a, ref, params=SsiParams()):
    a, ref = _pair(stack_complex(a), stack_complex(ref))
    if a.ndim != 1:
        raise ContractViolation("ssi_1d expects vectors")
    window = (min(params.window_1d, a.shape[0]),)
    return _ssim_windows(a, ref, window, *_stabilizers(a, ref, params))


def ssi_1d(a, ref, params=SsiParams()):
    return min(1.0, max(0.0, ssi_1d_raw(a, ref, params)))


def psnr_ssi_1d(a, ref, params=SsiParams()):
    """PSNR and SSI for a pair of spectra; complex vectors are stacked."""
    a_s, ref_s = stack_complex(a), stack_complex(ref)
    raw = ssi_1d_raw(a_s, ref_s, params)
    return QualityReport(psnr(a_s, ref_s), min(1.0, max(0.0, raw)), raw)


def _cube_data(c):
    return np.asarray(getattr(c, "data", c), dtype=float)


def bandwise_average(metric, cube_a, cube_ref, psnr_cap=PSNR_CAP_DB):
    """Mean over spectral bands of ``metric(band_a, band_ref)``.

    Band values above ``psnr_cap`` (i.e. +inf PSNR) are replaced by the cap.
    Returns ``(mean, capped_count)``.
    """
    a, ref = _cube_data(cube_a), _cube_data(cube_ref)
    if a.shape != ref.shape or a.ndim != 3:
        raise ContractViolation(f"cube dimensions differ: {a.shape} vs {ref.shape}")
    values = np.array([metric(a[:, :, b], ref[:, :, b]) for b in range(a.shape[2])])
    capped = int(np.count_nonzero(values > psnr_cap))
    values = np.minimum(values, psnr_cap)
    return float(np.mean(values)), capped


def bandwise_quality(cube_a, cube_ref, params=SsiParams(), psnr_cap=PSNR_CAP_DB):
    """Band-averaged PSNR and SSI between two cubes (``cube_ref`` is the reference)."""
    p, capped = bandwise_average(psnr, cube_a, cube_ref, psnr_cap)
    a, ref = _cube_data(cube_a), _cube_data(cube_ref)
    raw = np.array([ssi_raw(a[:, :, b], ref[:, :, b], params) for b in range(a.shape[2])])
    return QualityReport(p, float(np.mean(np.clip(raw, 0.0, 1.0))), float(np.mean(raw)), capped)
