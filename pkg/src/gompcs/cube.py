"""Hyperspectral cubes: storage, phantom generation and the per-pixel
sparsify -> compress -> recover pipeline.

Cube file layout (all little-endian)::

    offset  size  field
    0       8     magic  b"HSICUBE\\0"
    8       2     version (uint16, currently 1)
    10      1     value type (uint8: 1 = float32, 2 = float64)
    11      1     reserved, 0
    12      12    x_dim, y_dim, z_dim (3 x uint32)
    24      4     name length in bytes (uint32)
    28      L     name, UTF-8
    28+L    ...   x_dim*y_dim*z_dim values, C order over (x, y, band)

An optional ``<path>.json`` sidecar holds free-form metadata.
"""
import json
import logging
import math
import os
import struct
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .gomp import GompConfig, SupportOverflowError, gomp_recover
from .linalg import ContractViolation, RankDeficientError
from .metrics import PerfReport, QualityReport, SsiParams, bandwise_quality
from .sensing import (
    build_dft_basis,
    build_measurement_matrix,
    compose_dictionary,
    compress,
    measurement_count,
    pixel_seed,
    synthesize,
)
from .sparsify import sparsify

log = logging.getLogger(__name__)

__all__ = [
    "HsiCube",
    "CubeFormatError",
    "PipelineConfig",
    "PipelineReport",
    "PixelDiagnostic",
    "load_cube",
    "save_cube",
    "extract_pixel",
    "sparsify_cube",
    "generate_phantom_cube",
    "planted_coefficients",
    "run_pipeline",
    "REPORT_COLUMNS",
]

MAGIC = b"HSICUBE\0"
VERSION = 1
_HEADER = struct.Struct("<8sHBB3II")
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_DTYPE_CODES = {"float32": 1, "float64": 2}

REPORT_COLUMNS = [
    "T", "SR",
    "PSNR_spf_or", "SSI_spf_or",
    "PSNR_rec_or", "SSI_rec_or",
    "PSNR_rec_spf", "SSI_rec_spf",
    "J", "t",
]


class CubeFormatError(ValueError):
    def __init__(self, field_name, msg):
        self.field = field_name
        super().__init__(f"{field_name}: {msg}")


@dataclass
class HsiCube:
    data: np.ndarray  # (x, y, band)
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 3 or 0 in self.data.shape:
            raise ContractViolation(f"cube data must be a nonempty 3-D array, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ContractViolation("cube has non-finite values")

    @property
    def x_dim(self):
        return self.data.shape[0]

    @property
    def y_dim(self):
        return self.data.shape[1]

    @property
    def z_dim(self):
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def pixels(self):
        """View as (x_dim * y_dim, z_dim); row ``i`` is pixel ``divmod(i, y_dim)``."""
        return self.data.reshape(-1, self.z_dim)


def save_cube(cube, path, dtype="float32"):
    path = Path(path)
    code = _DTYPE_CODES[dtype]
    name = cube.name.encode("utf-8")
    header = _HEADER.pack(MAGIC, VERSION, code, 0, *cube.shape, len(name))
    payload = np.ascontiguousarray(cube.data, dtype=_DTYPES[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(name)
        fh.write(payload)
    if cube.metadata:
        Path(str(path) + ".json").write_text(json.dumps(cube.metadata, indent=2, sort_keys=True))


def load_cube(path):
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise CubeFormatError("header", f"file is {len(raw)} bytes, shorter than the header")
    magic, version, code, _, x, y, z, name_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CubeFormatError("magic", f"bad magic {magic!r}")
    if version != VERSION:
        raise CubeFormatError("version", f"unsupported version {version}")
    if code not in _DTYPES:
        raise CubeFormatError("value_type", f"unknown value type code {code}")
    if min(x, y, z) == 0:
        raise CubeFormatError("dims", f"zero dimension in {x}x{y}x{z}")
    start = _HEADER.size + name_len
    if start > len(raw):
        raise CubeFormatError("name", "name runs past end of file")
    try:
        name = raw[_HEADER.size:start].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CubeFormatError("name", str(exc)) from None
    dt = _DTYPES[code]
    expected = x * y * z * dt.itemsize
    if len(raw) - start != expected:
        raise CubeFormatError("payload", f"expected {expected} bytes, found {len(raw) - start}")
    data = np.frombuffer(raw, dtype=dt, offset=start).reshape(x, y, z).astype(float)
    if not np.all(np.isfinite(data)):
        raise CubeFormatError("values", "payload contains non-finite values")
    meta = {}
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
    return HsiCube(data, name, meta)


def extract_pixel(cube, x, y):
    if not (0 <= x < cube.x_dim and 0 <= y < cube.y_dim):
        raise IndexError(f"pixel ({x}, {y}) outside {cube.x_dim}x{cube.y_dim}")
    return cube.data[x, y, :].copy()


def _sparsify_pixels(pixels, T, psi):
    coefs = pixels @ psi.inverse.T
    kappas = np.empty(len(pixels), dtype=int)
    ratios = np.empty(len(pixels))
    for i, x in enumerate(coefs):
        sv, rep = sparsify(x, T)
        coefs[i] = sv.values
        kappas[i] = rep.kappa
        ratios[i] = rep.sparsity_ratio
    spf = (coefs @ psi.matrix.T).real
    return spf, coefs, kappas, ratios


def sparsify_cube(cube, T, psi=None):
    """Threshold every pixel in the transform domain and map it back.

    Returns ``(sparsified cube, mean SR in percent, kappa map of shape (x, y))``.
    """
    psi = psi or build_dft_basis(cube.z_dim)
    spf, _, kappas, ratios = _sparsify_pixels(cube.pixels(), T, psi)
    out = HsiCube(spf.reshape(cube.shape), f"{cube.name}_spf".lstrip("_"))
    return out, float(np.mean(ratios)), kappas.reshape(cube.x_dim, cube.y_dim)


def _support_layout(n, kappa):
    """(pair count, single indices) for a conjugate-symmetric kappa-sparse support."""
    pairs_available = (n - 1) // 2
    singles = [0] + ([n // 2] if n % 2 == 0 else [])
    for s in range(len(singles) + 1):
        if (kappa - s) % 2 == 0 and 0 <= (kappa - s) // 2 <= pairs_available:
            return (kappa - s) // 2, singles[:s]
    raise ContractViolation(f"no conjugate-symmetric support of size {kappa} for n={n}")


def planted_coefficients(n, kappa, rng):
    """Random exactly-kappa-sparse transform vector whose synthesis is real.

    Nonzero moduli lie in [1, 2] so any threshold T below 50 keeps them all.
    """
    if not 1 <= kappa <= n:
        raise ContractViolation(f"kappa must lie in [1, {n}], got {kappa}")
    n_pairs, singles = _support_layout(n, kappa)
    x = np.zeros(n, dtype=complex)
    for k in singles:
        x[k] = rng.uniform(1.0, 2.0) * (1.0 if k == 0 else rng.choice([-1.0, 1.0]))
    ks = rng.choice(np.arange(1, (n - 1) // 2 + 1), size=n_pairs, replace=False) if n_pairs else []
    for k in ks:
        c = rng.uniform(1.0, 2.0) * np.exp(2j * np.pi * rng.uniform())
        x[k] = c
        x[n - k] = np.conj(c)
    return x


def generate_phantom_cube(x, y, z, kappa, seed, noise=0.0, name="phantom"):
    """Cube whose pixels are syntheses of random kappa-sparse transform vectors.

    ``noise`` adds i.i.d. Gaussian noise of that standard deviation in the
    acquisition domain (the pixels are then no longer exactly sparse).
    """
    if kappa > z:
        raise ContractViolation(f"kappa={kappa} exceeds spectral size {z}")
    if min(x, y) < 1 or z < 2:
        raise ContractViolation(f"invalid phantom dims {x}x{y}x{z}")
    psi = build_dft_basis(z)
    rng = np.random.default_rng(seed)
    coefs = np.stack([planted_coefficients(z, kappa, rng) for _ in range(x * y)])
    data = (coefs @ psi.matrix.T).real
    if noise:
        data = data + noise * rng.standard_normal(data.shape)
    meta = {"kappa": kappa, "seed": seed, "noise": noise}
    return HsiCube(data.reshape(x, y, z), name, meta)


@dataclass(frozen=True)
class PipelineConfig:
    threshold_T: float
    compression_factor: float = 2.5
    measurements: Optional[int] = None
    group_size: int = 2
    epsilon: float = 1e-6
    relative_epsilon: bool = True
    max_iterations: Optional[int] = None
    seed: int = 0
    phi_mode: str = "per-pixel"
    kappa_mode: str = "sparsification"
    kappa: Optional[int] = None
    threads: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.threshold_T <= 100.0:
            raise ContractViolation(f"threshold T must lie in [0, 100], got {self.threshold_T}")
        if self.measurements is None and not self.compression_factor > 1:
            raise ContractViolation(f"compression factor must exceed 1, got {self.compression_factor}")
        if self.phi_mode not in ("per-pixel", "shared"):
            raise ContractViolation(f"unknown phi_mode {self.phi_mode!r}")
        if self.kappa_mode not in ("sparsification", "fixed"):
            raise ContractViolation(f"unknown kappa_mode {self.kappa_mode!r}")
        if self.kappa_mode == "fixed":
            if self.kappa is None:
                raise ContractViolation("kappa_mode 'fixed' needs kappa")
            GompConfig(self.kappa, self.group_size, self.epsilon, self.relative_epsilon,
                       self.max_iterations)
        if self.group_size < 1:
            raise ContractViolation(f"group_size must be >= 1, got {self.group_size}")

    def measurement_count(self, n):
        if self.measurements is not None:
            if not 1 <= self.measurements < n:
                raise ContractViolation(f"need 1 <= M < N, got M={self.measurements}, N={n}")
            return self.measurements
        return measurement_count(n, self.compression_factor)

    def gomp_config(self, kappa):
        if self.kappa_mode == "fixed":
            kappa = self.kappa
        kappa = max(1, int(kappa))
        return GompConfig(kappa, min(self.group_size, kappa), self.epsilon,
                          self.relative_epsilon, self.max_iterations)


@dataclass
class PixelDiagnostic:
    x: int
    y: int
    kappa: int
    iterations: int
    converged: bool
    final_delta: float
    residual_norm: float
    rel_error: float
    error: str = ""


@dataclass
class PipelineReport:
    threshold_T: float
    mean_SR: float
    n: int
    m: int
    spf_vs_or: QualityReport
    rec_vs_or: QualityReport
    rec_vs_spf: QualityReport
    perf: PerfReport
    config: PipelineConfig
    pixels: list = field(default_factory=list)

    @property
    def total_J(self):
        return self.perf.total_iterations_J

    @property
    def total_t_seconds(self):
        return self.perf.recovery_time_t

    @property
    def failures(self):
        return [p for p in self.pixels if p.error]

    def row(self):
        """Values in :data:`REPORT_COLUMNS` order."""
        return [
            self.threshold_T, self.mean_SR,
            self.spf_vs_or.psnr_db, self.spf_vs_or.ssi,
            self.rec_vs_or.psnr_db, self.rec_vs_or.ssi,
            self.rec_vs_spf.psnr_db, self.rec_vs_spf.ssi,
            self.total_J, self.total_t_seconds,
        ]

    def to_dict(self, include_pixels=False):
        d = {
            "T": self.threshold_T,
            "SR": self.mean_SR,
            "N": self.n,
            "M": self.m,
            "spf_vs_or": asdict(self.spf_vs_or),
            "rec_vs_or": asdict(self.rec_vs_or),
            "rec_vs_spf": asdict(self.rec_vs_spf),
            "J": self.total_J,
            "t": self.total_t_seconds,
            "pixels_recovered": self.perf.pixels_recovered,
            "pixels_failed": self.perf.pixels_failed,
            "failures": [{"x": p.x, "y": p.y, "error": p.error} for p in self.failures],
            "config": asdict(self.config),
        }
        if include_pixels:
            d["pixels"] = [asdict(p) for p in self.pixels]
        return d


def _recover_pixel(idx, f_spf, x_spf, kappa, cfg, psi, m, shared_a):
    if shared_a is not None:
        a = shared_a
    else:
        phi = build_measurement_matrix(m, psi.n, pixel_seed(cfg.seed, idx))
        a = compose_dictionary(phi, psi)
    y = compress(a.phi, f_spf)
    gcfg = cfg.gomp_config(kappa)
    res = gomp_recover(y, a, gcfg)
    f_rec = synthesize(psi, res.x_hat.values).values
    ref = np.linalg.norm(x_spf)
    err = np.linalg.norm(res.x_hat.values - x_spf)
    rel = float(err / ref) if ref > 0 else float(err)
    return f_rec, res, rel


def run_pipeline(cube, config, progress=None):
    """Sparsify, compress and recover every pixel of ``cube``.

    Returns ``(I_spf, I_rec, PipelineReport)``. Pixels whose recovery
    fails are emitted as zeros and listed in the report. ``progress`` is
    called as ``progress(done, total)`` after each pixel.
    """
    n = cube.z_dim
    if n < 4:
        raise ContractViolation(f"pipeline needs at least 4 bands, got {n}")
    psi = build_dft_basis(n)
    m = config.measurement_count(n)
    pixels = cube.pixels()
    f_spf, x_spf, kappas, ratios = _sparsify_pixels(pixels, config.threshold_T, psi)

    shared_a = None
    if config.phi_mode == "shared":
        phi = build_measurement_matrix(m, n, np.random.SeedSequence([config.seed]))
        shared_a = compose_dictionary(phi, psi)

    total = len(pixels)
    done = 0
    lock = threading.Lock()

    def work(idx):
        nonlocal done
        px, py = divmod(idx, cube.y_dim)
        try:
            f_rec, res, rel = _recover_pixel(idx, f_spf[idx], x_spf[idx], kappas[idx],
                                             config, psi, m, shared_a)
            diag = PixelDiagnostic(px, py, int(kappas[idx]), res.iterations, res.converged,
                                   res.final_delta, res.residual_norm, rel)
        except (SupportOverflowError, RankDeficientError, ContractViolation,
                np.linalg.LinAlgError) as exc:
            iters = getattr(exc, "iterations", 0)
            f_rec = np.zeros(n)
            diag = PixelDiagnostic(px, py, int(kappas[idx]), iters, False, math.nan,
                                   math.nan, math.nan, f"{type(exc).__name__}: {exc}")
            log.debug("pixel (%d, %d) failed: %s", px, py, exc)
        with lock:
            done += 1
            if progress is not None:
                progress(done, total)
        return f_rec, diag

    threads = config.threads or os.cpu_count() or 1
    t0 = time.perf_counter()
    if threads == 1:
        outcomes = [work(i) for i in range(total)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, range(total)))
    elapsed = time.perf_counter() - t0

    rec = np.stack([o[0] for o in outcomes])
    diags = [o[1] for o in outcomes]
    i_spf = HsiCube(f_spf.reshape(cube.shape), f"{cube.name}_spf".lstrip("_"))
    i_rec = HsiCube(rec.reshape(cube.shape), f"{cube.name}_rec".lstrip("_"))

    failed = sum(1 for d in diags if d.error)
    perf = PerfReport(sum(d.iterations for d in diags), elapsed, total - failed, failed)
    params = SsiParams()
    report = PipelineReport(
        float(config.threshold_T),
        float(np.mean(ratios)),
        n,
        m,
        bandwise_quality(i_spf, cube, params),
        bandwise_quality(i_rec, cube, params),
        bandwise_quality(i_rec, i_spf, params),
        perf,
        config,
        diags,
    )
    return i_spf, i_rec, report
