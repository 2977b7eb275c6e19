"""Dense complex-matrix kernels shared by every other module.

Everything here is a pure function of its inputs. Matrices are plain
``numpy.ndarray`` objects of dtype ``complex128`` (real input is promoted).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.special

from .errors import DimensionError, DomainError, SingularMatrixError

# Default tolerances. Every function taking a tolerance accepts an override.
HERMITIAN_TOL = 1e-12
PSD_CLAMP_TOL = 1e-10
MAX_CONDITION = 1e12
EIG_CLUSTER_TOL = 1e-10


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted non-increasing, paired column-wise with ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def hermitize(m: np.ndarray) -> np.ndarray:
    """Return ``(m + m^H) / 2``."""
    return 0.5 * (m + m.conj().T)


def _require_square(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")


def hermitian_eig(m, cluster_tol: float = EIG_CLUSTER_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix with deterministic output.

    Eigenvalues are returned in non-increasing order. Each eigenvector is
    rotated so that its largest-magnitude entry is real and positive, and
    columns whose eigenvalues agree to within ``cluster_tol`` (relative to the
    spectral radius) are ordered by the row index of that entry.
    """
    m = as_cmatrix(m)
    _require_square(m)
    values, vectors = np.linalg.eigh(hermitize(m))
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()

    pivots = np.argmax(np.abs(vectors) > np.abs(vectors).max(axis=0) * (1 - 1e-12), axis=0)
    phases = vectors[pivots, np.arange(vectors.shape[1])]
    vectors = vectors * (np.abs(phases) / phases)

    scale = max(1.0, float(np.max(np.abs(values))))
    order = []
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and values[start] - values[stop] <= cluster_tol * scale:
            stop += 1
        cluster = list(range(start, stop))
        cluster.sort(key=lambda k: pivots[k])
        order.extend(cluster)
        start = stop
    order = np.asarray(order)
    return EigenDecomposition(values[order], vectors[:, order])


def psd_sqrt(m, clamp_tol: float = PSD_CLAMP_TOL) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues down to ``-clamp_tol`` (relative to the largest) are clamped
    to zero; anything more negative raises :class:`DomainError`.
    """
    eig = hermitian_eig(m)
    scale = max(1.0, float(np.max(np.abs(eig.values))))
    if eig.values[-1] < -clamp_tol * scale:
        raise DomainError(f"matrix is indefinite (min eigenvalue {eig.values[-1]:.3e})")
    root = np.sqrt(np.clip(eig.values, 0.0, None))
    return hermitize((eig.vectors * root) @ eig.vectors.conj().T)


def cholesky_hpd(a, max_condition: float = MAX_CONDITION) -> np.ndarray:
    """Lower Cholesky factor of a Hermitian positive definite matrix.

    The condition number is estimated from the factor's diagonal, which is
    cheap and never overestimates the true value.
    """
    a = as_cmatrix(a)
    _require_square(a)
    try:
        low = scipy.linalg.cholesky(hermitize(a), lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("matrix is not positive definite") from exc
    d = np.abs(np.diag(low))
    if d.min() == 0.0 or (d.max() / d.min()) ** 2 > max_condition:
        raise SingularMatrixError("matrix is numerically singular")
    return low


def solve_hpd(a, b, max_condition: float = MAX_CONDITION) -> np.ndarray:
    """Solve ``a @ x = b`` for Hermitian positive definite ``a`` via Cholesky."""
    low = cholesky_hpd(a, max_condition)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != low.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, matrix is {low.shape}")
    return scipy.linalg.cho_solve((low, True), b, check_finite=False)


def htrace(m: np.ndarray) -> float:
    """Real part of the trace (exact for Hermitian input)."""
    return float(np.trace(m).real)


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero."""
    return float(scipy.special.j0(x))


def random_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-distributed ``rows x cols`` matrix with orthonormal columns."""
    if cols > rows:
        raise DomainError(f"cannot fit {cols} orthonormal columns in dimension {rows}")
    g = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))
