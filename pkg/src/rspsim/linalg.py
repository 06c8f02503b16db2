"""Fixed-size complex linear algebra for qubit and qubit-pair operators.

Matrices are plain ``numpy`` arrays of shape (2, 2) or (4, 4) with complex
dtype.  Two-qubit objects use the basis order (HH, HV, VH, VV): the first
tensor factor is Alice, the second is Bob.
"""

from __future__ import annotations

import numpy as np

# tolerance tiers
ALGEBRA_TOL = 1e-12
PHYSICS_TOL = 1e-10
INPUT_TOL = 1e-6

ALICE = "A"
BOB = "B"


class ValidationError(ValueError):
    """Raised when an operator or state fails a physical invariant."""


def as_matrix(m, dim: int | None = None) -> np.ndarray:
    """Return ``m`` as a finite complex square array, optionally of size ``dim``."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValidationError(f"expected a {dim}x{dim} matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def max_abs(m: np.ndarray) -> float:
    """Entrywise infinity norm."""
    return float(np.max(np.abs(m)))


def is_hermitian(m: np.ndarray, tol: float = PHYSICS_TOL) -> bool:
    return max_abs(m - dagger(m)) <= tol


def is_unitary(m: np.ndarray, tol: float = PHYSICS_TOL) -> bool:
    return max_abs(dagger(m) @ m - np.eye(m.shape[0])) <= tol


def is_psd(m: np.ndarray, tol: float = PHYSICS_TOL) -> bool:
    if not is_hermitian(m, tol):
        return False
    return float(np.linalg.eigvalsh(0.5 * (m + dagger(m)))[0]) >= -tol


def det2(m: np.ndarray) -> complex:
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` acting on Alice and ``b`` on Bob."""
    return np.kron(as_matrix(a, 2), as_matrix(b, 2))


def partial_trace(rho: np.ndarray, keep: str) -> np.ndarray:
    """Reduce a 4x4 two-qubit operator onto subsystem ``keep`` ("A" or "B")."""
    rho = as_matrix(rho, 4)
    if not is_hermitian(rho):
        raise ValidationError("partial_trace requires a Hermitian operator")
    r = rho.reshape(2, 2, 2, 2)  # (a, b, a', b')
    if keep == ALICE:
        return np.einsum("ijkj->ik", r)
    if keep == BOB:
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def _fix_column_phases(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rephase columns so the first nonzero entry of each is real non-negative.

    Returns the rephased matrix and the applied phases (one per column).
    """
    q = q.copy()
    phases = np.ones(q.shape[1], dtype=complex)
    for k in range(q.shape[1]):
        col = q[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-14))
        lead = col[idx]
        if abs(lead) > 0:
            phases[k] = np.conj(lead) / abs(lead)
            q[:, k] = col * phases[k]
    return q, phases


def herm_eig2(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a 2x2 Hermitian matrix.

    Eigenvalues are returned in non-increasing order; eigenvector columns are
    rephased so their first nonzero component is real and non-negative.
    """
    h = as_matrix(h, 2)
    if not is_hermitian(h):
        raise ValidationError("herm_eig2 requires a Hermitian matrix")
    w, q = np.linalg.eigh(0.5 * (h + dagger(h)))
    w, q = w[::-1], q[:, ::-1]
    q, _ = _fix_column_phases(q)
    return w.real.copy(), q


def svd2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition ``m = u @ d @ v`` of a 2x2 complex matrix.

    ``d`` is real diagonal with non-increasing entries.  The column phases of
    ``u`` are fixed (first nonzero entry real non-negative) and compensated in
    the rows of ``v``.
    """
    m = as_matrix(m, 2)
    u, s, v = np.linalg.svd(m)
    u, phases = _fix_column_phases(u)
    # u' = u P with P diagonal unitary, so m = u' d (P^dagger v)
    v = np.conj(phases)[:, None] * v
    return u, np.diag(s).astype(complex), v


def sqrt_psd2(a: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 positive semidefinite matrix.

    Uses ``(a + sqrt(det a) I) / sqrt(tr a + 2 sqrt(det a))`` and falls back to
    an eigendecomposition when the denominator underflows.
    """
    a = as_matrix(a, 2)
    if not is_psd(a):
        raise ValidationError("sqrt_psd2 requires a positive semidefinite matrix")
    a = 0.5 * (a + dagger(a))
    s = np.sqrt(max(float(det2(a).real), 0.0))
    denom = float(np.trace(a).real) + 2.0 * s
    if denom >= 1e-12:
        return (a + s * np.eye(2)) / np.sqrt(denom)
    w, q = herm_eig2(a)
    return q @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ dagger(q)
