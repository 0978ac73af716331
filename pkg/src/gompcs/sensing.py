"""Measurement model operators: DFT basis, random measurement matrix and dictionary.

A spectrum ``f`` (real, length N) is written ``f = psi @ x`` with ``psi``
the unitary DFT matrix, and compressed to ``y = phi @ f = (phi @ psi) @ x``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import ContractViolation

__all__ = [
    "TransformBasis",
    "MeasurementMatrix",
    "Dictionary",
    "Synthesis",
    "build_dft_basis",
    "build_measurement_matrix",
    "compose_dictionary",
    "measurement_count",
    "pixel_seed",
    "compress",
    "analyze",
    "synthesize",
]

SYMMETRY_WARN_RATIO = 1e-3


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransformBasis:
    n: int
    matrix: np.ndarray
    inverse: np.ndarray


@dataclass(frozen=True)
class MeasurementMatrix:
    m: int
    n: int
    matrix: np.ndarray  # real, m x n
    seed: object = None


@dataclass(frozen=True)
class Dictionary:
    matrix: np.ndarray
    atom_norms: np.ndarray
    phi: MeasurementMatrix = None
    psi: TransformBasis = None

    @classmethod
    def from_matrix(cls, matrix):
        """Wrap an arbitrary M x N matrix (used for synthetic tests)."""
        matrix = _frozen(np.asarray(matrix, dtype=complex))
        if matrix.ndim != 2:
            raise ContractViolation("dictionary must be 2-D")
        norms = np.linalg.norm(matrix, axis=0)
        if np.any(norms == 0):
            raise ContractViolation("dictionary has a zero atom")
        return cls(matrix, _frozen(norms))

    @property
    def rows(self):
        return self.matrix.shape[0]

    @property
    def cols(self):
        return self.matrix.shape[1]


class Synthesis(NamedTuple):
    """Acquisition-domain spectrum plus the imaginary residue of ``psi @ x``."""
    values: np.ndarray
    max_imag: float
    symmetry_warning: bool


def build_dft_basis(n):
    if n < 2:
        raise ContractViolation(f"DFT basis needs n >= 2, got {n}")
    jk = np.outer(np.arange(n), np.arange(n)) % n  # reduce before scaling to keep the phase exact
    matrix = np.exp(-2j * np.pi * jk / n) / np.sqrt(n)
    return TransformBasis(n, _frozen(matrix), _frozen(matrix.conj().T))


def pixel_seed(seed, index):
    """Sub-seed for pixel ``index`` derived from the global seed."""
    return np.random.SeedSequence([int(seed), int(index)])


def build_measurement_matrix(m, n, seed):
    """Gaussian N(0, 1/m) matrix; ``seed`` is an int or a SeedSequence."""
    if not 1 <= m < n:
        raise ContractViolation(f"measurement matrix needs 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((m, n)) / np.sqrt(m)
    return MeasurementMatrix(m, n, _frozen(matrix), seed)


def measurement_count(n, compression=2.5):
    """``round(n / compression)``, half rounding up."""
    if compression <= 1:
        raise ContractViolation(f"compression factor must exceed 1, got {compression}")
    m = int(np.floor(n / compression + 0.5))
    return max(1, min(m, n - 1))


def compose_dictionary(phi, psi):
    if phi.n != psi.n:
        raise ContractViolation(f"phi has {phi.n} columns but basis has size {psi.n}")
    a = phi.matrix @ psi.matrix
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise ContractViolation("dictionary has a zero atom")
    return Dictionary(_frozen(a), _frozen(norms), phi, psi)


def _spectrum(f, n):
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.shape[0] != n:
        raise ContractViolation(f"expected a length-{n} spectrum, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ContractViolation("spectrum has non-finite values")
    return f


def compress(phi, f):
    return phi.matrix @ _spectrum(f, phi.n)


def analyze(psi, f):
    return psi.inverse @ _spectrum(f, psi.n)


def synthesize(psi, x):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or x.shape[0] != psi.n:
        raise ContractViolation(f"expected a length-{psi.n} vector, got shape {x.shape}")
    g = psi.matrix @ x
    max_imag = float(np.max(np.abs(g.imag)))
    peak = float(np.max(np.abs(g)))
    warn = peak > 0 and max_imag > SYMMETRY_WARN_RATIO * peak
    return Synthesis(g.real.copy(), max_imag, warn)
