"""Dense complex linear-algebra kernel used by the recovery solver.

Vectors and matrices are plain numpy arrays (``complex128`` where it
matters). Real inputs are embedded as complex with zero imaginary part.
"""
import numpy as np

__all__ = [
    "ContractViolation",
    "RankDeficientError",
    "as_cvector",
    "as_cmatrix",
    "conj_transpose",
    "matvec",
    "householder_qr",
    "least_squares_solve",
    "argmax_k",
    "l2_norm",
]

RANK_TOL = 1e-12


class ContractViolation(ValueError):
    """An operation was called with arguments outside its contract."""


class RankDeficientError(np.linalg.LinAlgError):
    """Least-squares system whose matrix lacks full column rank.

    ``rank`` is the numerical rank seen on the R diagonal; ``support`` is
    filled in by callers that know which dictionary columns were involved.
    """

    def __init__(self, rank, cols, support=None):
        self.rank = rank
        self.cols = cols
        self.support = support
        msg = f"rank-deficient system: numerical rank {rank} < {cols} columns"
        if support is not None:
            msg += f" (support {list(support)})"
        super().__init__(msg)


def as_cvector(v):
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise ContractViolation(f"expected a nonempty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractViolation("vector has non-finite entries")
    return v


def as_cmatrix(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise ContractViolation(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation("matrix has non-finite entries")
    return m


def conj_transpose(m):
    return as_cmatrix(m).conj().T.copy()


def matvec(m, v):
    m = as_cmatrix(m)
    v = as_cvector(v)
    if m.shape[1] != v.shape[0]:
        raise ContractViolation(
            f"matvec dimension mismatch: {m.shape} matrix with length-{v.shape[0]} vector"
        )
    return m @ v


def householder_qr(b):
    """Householder QR of a tall complex matrix.

    Returns ``(reflectors, r)`` where ``reflectors`` is a list of unit
    vectors ``v_k`` (acting on rows ``k:``) such that
    ``H_{n-1} ... H_0 b = r`` with ``H_k = I - 2 v_k v_k^H``. ``r`` is
    ``rows x cols`` upper triangular.
    """
    r = np.array(b, dtype=complex)
    rows, cols = r.shape
    reflectors = []
    for k in range(min(cols, rows)):
        x = r[k:, k]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            reflectors.append(None)
            continue
        # sign choice avoids cancellation in v[0]
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * normx
        v /= np.linalg.norm(v)
        r[k:, k:] -= 2.0 * np.outer(v, v.conj() @ r[k:, k:])
        r[k + 1:, k] = 0.0
        reflectors.append(v)
    return reflectors, r


def _apply_qh(reflectors, y):
    z = np.array(y, dtype=complex)
    for k, v in enumerate(reflectors):
        if v is None:
            continue
        z[k:] -= 2.0 * v * (v.conj() @ z[k:])
    return z


def least_squares_solve(b, y):
    """Minimise ``||y - b s||_2`` for a tall, full-column-rank ``b``.

    Raises RankDeficientError when some ``|R_kk|`` falls below
    ``1e-12 * max |R_jj|``.
    """
    b = as_cmatrix(b)
    y = as_cvector(y)
    rows, cols = b.shape
    if rows != y.shape[0]:
        raise ContractViolation(f"least squares: {rows} rows but length-{y.shape[0]} rhs")
    if cols > rows:
        raise ContractViolation(f"least squares needs cols <= rows, got {b.shape}")

    reflectors, r = householder_qr(b)
    diag = np.abs(np.diag(r))
    dmax = diag.max()
    keep = diag >= RANK_TOL * dmax if dmax > 0 else np.zeros(cols, dtype=bool)
    if not keep.all():
        raise RankDeficientError(int(keep.sum()), cols)

    z = _apply_qh(reflectors, y)[:cols]
    s = np.zeros(cols, dtype=complex)
    for k in range(cols - 1, -1, -1):
        s[k] = (z[k] - r[k, k + 1:cols] @ s[k + 1:]) / r[k, k]
    return s


def argmax_k(magnitudes, k):
    """Indices of the ``k`` largest entries, ascending by index.

    Ties go to the lower index.
    """
    mags = np.asarray(magnitudes, dtype=float)
    if mags.ndim != 1:
        raise ContractViolation("argmax_k expects a 1-D array")
    if not 1 <= k <= mags.shape[0]:
        raise ContractViolation(f"argmax_k: k={k} outside [1, {mags.shape[0]}]")
    if not np.all(np.isfinite(mags)) or np.any(mags < 0):
        raise ContractViolation("argmax_k: magnitudes must be finite and nonnegative")
    order = np.argsort(-mags, kind="stable")
    return np.sort(order[:k])


def l2_norm(v):
    return float(np.linalg.norm(np.asarray(v, dtype=complex)))
