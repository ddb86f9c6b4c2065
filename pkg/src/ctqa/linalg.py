"""Small dense complex linear algebra for inner-state spaces.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
The matrix exponential of a Hermitian generator is computed from a
cyclic Jacobi eigendecomposition, so the result is unitary to rounding.
"""

from __future__ import annotations

from numbers import Real
from typing import Iterable, Tuple

import numpy as np

#: Tolerance of structural checks (hermiticity, unitarity on construction).
STRUCTURAL_TOL = 1e-12
#: Tolerance of behavioural checks (norms and probabilities after evolution).
BEHAVIOURAL_TOL = 1e-9

MAX_DIM = 64
_JACOBI_MAX_SWEEPS = 64

ComplexMatrix = np.ndarray
StateVector = np.ndarray

NOT = np.array([[0, 1], [1, 0]], dtype=complex)


class LinalgError(ValueError):
    pass


class NotHermitianError(LinalgError):
    def __init__(self, asymmetry: float):
        super().__init__(f"not Hermitian: max asymmetry {asymmetry:.3e}")
        self.asymmetry = asymmetry


class ConvergenceError(LinalgError):
    def __init__(self, residual: float, sweeps: int):
        super().__init__(
            f"Jacobi iteration did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual


def as_matrix(a, *, square: bool = True) -> ComplexMatrix:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise LinalgError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {m.shape}")
    if max(m.shape) > MAX_DIM:
        raise LinalgError(f"dimension {max(m.shape)} exceeds the supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    return m


def frozen(a: np.ndarray) -> np.ndarray:
    """Read-only copy of ``a``."""
    out = np.array(a, dtype=complex)
    out.flags.writeable = False
    return out


def identity(dim: int) -> ComplexMatrix:
    return np.eye(dim, dtype=complex)


def zeros(dim: int) -> ComplexMatrix:
    return np.zeros((dim, dim), dtype=complex)


def basis_state(dim: int, index: int) -> StateVector:
    if not 0 <= index < dim:
        raise LinalgError(f"basis index {index} out of range for dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def hermitian_defect(h: ComplexMatrix) -> float:
    """Max-entry distance ``max |H - H^dagger|``."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return float("inf")
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def unitary_defect(u: ComplexMatrix) -> float:
    """Max-entry distance ``max |U U^dagger - I|``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return float("inf")
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def is_hermitian(h: ComplexMatrix, tol: float = STRUCTURAL_TOL) -> bool:
    return hermitian_defect(h) <= tol


def is_unitary(u: ComplexMatrix, tol: float = STRUCTURAL_TOL) -> bool:
    return unitary_defect(u) <= tol


def _check_hermitian(h) -> ComplexMatrix:
    h = as_matrix(h)
    defect = hermitian_defect(h)
    if defect > STRUCTURAL_TOL:
        raise NotHermitianError(defect)
    # Symmetrise so the Jacobi sweeps see an exactly Hermitian matrix.
    return (h + h.conj().T) / 2


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def eigh(h: ComplexMatrix) -> Tuple[np.ndarray, ComplexMatrix]:
    """Eigendecomposition ``H = V diag(w) V^dagger`` of a Hermitian matrix.

    Cyclic Jacobi sweeps with complex plane rotations. Each rotation first
    removes the phase of the pivot ``a[p, q]`` and then applies the real
    symmetric Jacobi rotation that annihilates it.

    Returns
    -------
    w : ndarray of float, ascending
    v : ndarray, unitary, columns are eigenvectors
    """
    a = _check_hermitian(h).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(float(np.max(np.abs(a))), 1.0)
    threshold = 1e-15 * scale * n

    sweeps = 0
    while _off_norm(a) > threshold:
        if sweeps >= _JACOBI_MAX_SWEEPS:
            raise ConvergenceError(_off_norm(a), sweeps)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g

    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _duration(t) -> float:
    if isinstance(t, bool) or not isinstance(t, (Real, np.floating, np.integer)):
        raise TypeError(f"duration must be a real number, got {type(t).__name__}")
    tf = float(t)
    if not np.isfinite(tf):
        raise LinalgError("duration must be finite")
    if tf < 0:
        raise LinalgError(f"negative duration {t}")
    return tf


def spectral_exp(w: np.ndarray, v: ComplexMatrix, t: float) -> ComplexMatrix:
    """``V diag(exp(-i w t)) V^dagger`` for a precomputed eigendecomposition."""
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def mat_exp_hermitian(h: ComplexMatrix, t) -> ComplexMatrix:
    """Unitary ``exp(-i H t)`` (hbar = 1) for Hermitian ``H`` and ``t >= 0``."""
    tf = _duration(t)
    w, v = eigh(h)
    if tf == 0.0:
        return identity(len(w))
    return spectral_exp(w, v, tf)


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return np.kron(as_matrix(a, square=False), as_matrix(b, square=False))


def direct_sum(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Block-diagonal ``diag(A, B)`` of two square matrices."""
    a = as_matrix(a)
    b = as_matrix(b)
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n + m, n + m), dtype=complex)
    out[:n, :n] = a
    out[n:, n:] = b
    return out


def projector(dim: int, indices: Iterable[int]) -> ComplexMatrix:
    """Diagonal 0/1 projector onto the span of the given basis indices."""
    if dim <= 0:
        raise LinalgError(f"dimension must be positive, got {dim}")
    p = np.zeros((dim, dim), dtype=complex)
    for i in indices:
        if not 0 <= i < dim:
            raise LinalgError(f"index {i} out of range for dimension {dim}")
        p[i, i] = 1.0
    return p


def expectation(p: ComplexMatrix, v: StateVector) -> float:
    """``<v|P|v>`` as a real number."""
    return float(np.real(np.vdot(v, p @ v)))


def apply(u: ComplexMatrix, v: StateVector) -> StateVector:
    """``U|v>`` with shape and unitarity checks."""
    u = as_matrix(u)
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.shape[0] != u.shape[1]:
        raise LinalgError(f"dimension mismatch: matrix {u.shape} vs vector {v.shape}")
    defect = unitary_defect(u)
    if defect > BEHAVIOURAL_TOL:
        raise LinalgError(f"operator is not unitary (defect {defect:.3e})")
    return u @ v
