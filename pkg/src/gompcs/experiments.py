"""Seeded recovery trials over parameter grids."""
from dataclasses import dataclass, replace

import numpy as np

from .cube import planted_coefficients, run_pipeline
from .gomp import GompConfig, SupportOverflowError, gomp_recover
from .linalg import RankDeficientError
from .metrics import psnr_ssi_1d
from .sensing import (
    Dictionary,
    analyze,
    build_dft_basis,
    build_measurement_matrix,
    compose_dictionary,
    compress,
    synthesize,
)
from .sparsify import calibrate_threshold, sparsify

__all__ = [
    "CellResult",
    "PixelStudy",
    "PIXEL_STUDY_COLUMNS",
    "SWEEP_COLUMNS",
    "SUCCESS_TOL",
    "planted_trial",
    "planted_trials",
    "pixel_study",
    "threshold_sweep",
]

SUCCESS_TOL = 1e-6
SWEEP_COLUMNS = ["mode", "T", "kappa", "M", "N", "G", "trials", "success_rate", "mean_J", "mean_t"]


@dataclass
class CellResult:
    mode: str
    T: object
    kappa: object
    M: object
    N: int
    G: int
    trials: int
    success_rate: float
    mean_J: float
    mean_t: float
    rel_errors: list = None

    def row(self):
        return [getattr(self, c) if getattr(self, c) is not None else "" for c in SWEEP_COLUMNS]


def planted_trial(n, m, kappa, group_size, seed, trial, epsilon=1e-6, psi=None):
    """One planted recovery: returns ``(x0, result)``; ``result`` is None on solver failure.

    Pixel and measurement matrix come from ``SeedSequence([seed, trial])``;
    ``m`` may equal ``n`` (no compression).
    """
    psi = psi or build_dft_basis(n)
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    x0 = planted_coefficients(n, kappa, rng)
    f = (psi.matrix @ x0).real
    phi = rng.standard_normal((m, n)) / np.sqrt(m)
    a = Dictionary.from_matrix(phi @ psi.matrix)
    cfg = GompConfig(kappa, min(group_size, kappa), epsilon)
    try:
        return x0, gomp_recover(phi @ f, a, cfg)
    except (SupportOverflowError, RankDeficientError):
        return x0, None


def planted_trials(n, m, kappa, group_size=2, trials=100, seed=0, epsilon=1e-6):
    psi = build_dft_basis(n)
    errors, iters, times = [], [], []
    for t in range(trials):
        x0, res = planted_trial(n, m, kappa, group_size, seed, t, epsilon, psi)
        if res is None:
            errors.append(np.inf)
            continue
        errors.append(np.linalg.norm(res.x_hat.values - x0) / np.linalg.norm(x0))
        iters.append(res.iterations)
        times.append(res.elapsed)
    errors = np.array(errors)
    return CellResult(
        "grid", None, kappa, m, n, group_size, trials,
        float(np.mean(errors < SUCCESS_TOL)),
        float(np.mean(iters)) if iters else float("nan"),
        float(np.mean(times)) if times else float("nan"),
        errors.tolist(),
    )


def threshold_sweep(cube, t_values, base_config, trials=1, seed=0):
    """Run the full pipeline once per (T, trial); per-pixel success is a
    transform-domain relative error below ``SUCCESS_TOL`` against the
    sparsified pixel."""
    out = []
    npx = cube.x_dim * cube.y_dim
    for T in t_values:
        succ, js, ts = [], [], []
        for t in range(trials):
            cfg = replace(base_config, threshold_T=float(T), seed=seed + t)
            _, _, rep = run_pipeline(cube, cfg)
            succ.append(np.mean([(not p.error) and p.rel_error < SUCCESS_TOL for p in rep.pixels]))
            js.append(rep.total_J / npx)
            ts.append(rep.total_t_seconds / npx)
        out.append(CellResult(
            "threshold", float(T), base_config.kappa if base_config.kappa_mode == "fixed" else None,
            base_config.measurement_count(cube.z_dim), cube.z_dim, base_config.group_size, trials,
            float(np.mean(succ)), float(np.mean(js)), float(np.mean(ts)),
        ))
    return out


@dataclass
class PixelStudy:
    """Single-spectrum comparison of recovery with and without sparsification."""
    kappa: int
    T: float
    kappa_spf: int
    x_rec_vs_x: object
    f_rec_vs_f: object
    x_spf_vs_x: object
    f_spf_vs_f: object
    x_rec_spf_vs_x_spf: object
    f_rec_spf_vs_f_spf: object
    iterations: int
    iterations_spf: int

    def cells(self):
        return [
            self.kappa, self.x_rec_vs_x.as_pair(), self.f_rec_vs_f.as_pair(), self.T,
            self.x_spf_vs_x.as_pair(), self.f_spf_vs_f.as_pair(),
            self.x_rec_spf_vs_x_spf.as_pair(), self.f_rec_spf_vs_f_spf.as_pair(),
        ]


PIXEL_STUDY_COLUMNS = [
    "K", "PSNR/SSI(x_rec,x)", "PSNR/SSI(f_rec,f)", "T", "PSNR/SSI(x_spf,x)",
    "PSNR/SSI(f_spf,f)", "PSNR/SSI(x_rec_spf,x_spf)", "PSNR/SSI(f_rec_spf,f_spf)",
]


def pixel_study(f, m, kappa=15, T=None, group_size=2, seed=0, epsilon=1e-6):
    """Recover ``f`` from ``m`` Gaussian measurements twice: as is with a
    fixed ``kappa``, and after sparsification with threshold ``T``
    (calibrated to leave ``kappa`` coefficients when ``T`` is None), using
    the sparsified sparsity level. Both runs share one measurement matrix.
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    psi = build_dft_basis(n)
    phi = build_measurement_matrix(m, n, np.random.SeedSequence([seed]))
    a = compose_dictionary(phi, psi)
    x = analyze(psi, f)
    if T is None:
        T = calibrate_threshold(x, kappa)
    sv, rep = sparsify(x, T)
    x_spf = sv.values
    f_spf = synthesize(psi, x_spf).values

    res = gomp_recover(compress(phi, f), a, GompConfig(kappa, min(group_size, kappa), epsilon))
    k_spf = max(1, rep.kappa)
    res_spf = gomp_recover(compress(phi, f_spf), a, GompConfig(k_spf, min(group_size, k_spf), epsilon))
    x_rec, x_rec_spf = res.x_hat.values, res_spf.x_hat.values
    return PixelStudy(
        kappa, float(T), rep.kappa,
        psnr_ssi_1d(x_rec, x), psnr_ssi_1d(synthesize(psi, x_rec).values, f),
        psnr_ssi_1d(x_spf, x), psnr_ssi_1d(f_spf, f),
        psnr_ssi_1d(x_rec_spf, x_spf), psnr_ssi_1d(synthesize(psi, x_rec_spf).values, f_spf),
        res.iterations, res_spf.iterations,
    )
