"""Qubit and qubit-pair states, target-state constructors and state metrics.

Circular polarization convention: |R> = (|H> + i|V>)/sqrt(2) is the +1
eigenvector of sigma_y, so the third Stokes component <sigma_y> is positive
for right-circular light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    ALGEBRA_TOL,
    BOB,
    INPUT_TOL,
    PHYSICS_TOL,
    ValidationError,
    as_matrix,
    dagger,
    det2,
    is_hermitian,
    is_psd,
    partial_trace,
    sqrt_psd2,
)

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

KET_H = np.array([1, 0], dtype=complex)
KET_V = np.array([0, 1], dtype=complex)
KET_D = np.array([1, 1], dtype=complex) / math.sqrt(2)
KET_A = np.array([1, -1], dtype=complex) / math.sqrt(2)
KET_R = np.array([1, 1j], dtype=complex) / math.sqrt(2)
KET_L = np.array([1, -1j], dtype=complex) / math.sqrt(2)


def pauli(which: str) -> np.ndarray:
    """Return a copy of the Pauli matrix named ``I``, ``X``, ``Y`` or ``Z``."""
    try:
        return PAULIS[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}") from None


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, np.conj(ket))


def _check_density(mat: np.ndarray, tol: float) -> None:
    if not is_hermitian(mat, tol):
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(mat) - 1.0) > tol:
        raise ValidationError(f"density matrix trace {np.trace(mat).real:.3g} != 1")
    if not is_psd(mat, tol):
        raise ValidationError("density matrix is not positive semidefinite")


@dataclass(frozen=True, eq=False)
class PureQubit:
    amp_h: complex
    amp_v: complex

    def __post_init__(self):
        norm = abs(self.amp_h) ** 2 + abs(self.amp_v) ** 2
        if abs(norm - 1.0) > PHYSICS_TOL:
            raise ValidationError(f"pure qubit not normalized (|a|^2+|b|^2 = {norm})")

    @classmethod
    def from_vector(cls, vec) -> "PureQubit":
        vec = np.asarray(vec, dtype=complex)
        return cls(complex(vec[0]), complex(vec[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_h, self.amp_v], dtype=complex)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(projector(self.vector))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated single-qubit density matrix."""

    mat: np.ndarray

    def __post_init__(self):
        mat = as_matrix(self.mat, 2)
        _check_density(mat, PHYSICS_TOL)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        return cls(projector(ket))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(I2 / 2)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Validated 4x4 density matrix, Alice first, basis (HH, HV, VH, VV)."""

    mat: np.ndarray

    def __post_init__(self):
        mat = as_matrix(self.mat, 4)
        _check_density(mat, PHYSICS_TOL)
        object.__setattr__(self, "mat", mat)

    def reduced(self, keep: str = BOB) -> DensityMatrix:
        return DensityMatrix(partial_trace(self.mat, keep))


@dataclass(frozen=True)
class TargetPureSpec:
    """Target alpha|H> + beta e^{i phi}|V> with real alpha, beta and phi in radians."""

    alpha: float
    beta: float
    phi: float

    def __post_init__(self):
        _normalize_pair(self, "alpha", "beta")
        if not math.isfinite(self.phi):
            raise ValidationError("phi must be finite")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    @classmethod
    def from_polar(cls, polar: float, phi: float) -> "TargetPureSpec":
        """Build from the Bloch polar angle (0 at |H>) and longitude ``phi``."""
        return cls(math.cos(polar / 2), math.sin(polar / 2), phi)


@dataclass(frozen=True)
class TargetMixedSpec:
    """Target p^2 |phi><phi| + q^2 |phi_perp><phi_perp|."""

    alpha: float
    beta: float
    phi: float
    p: float
    q: float

    def __post_init__(self):
        _normalize_pair(self, "alpha", "beta")
        _normalize_pair(self, "p", "q")
        if not math.isfinite(self.phi):
            raise ValidationError("phi must be finite")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    @property
    def pure_part(self) -> TargetPureSpec:
        return TargetPureSpec(self.alpha, self.beta, self.phi)


def _normalize_pair(obj, na: str, nb: str, tol: float = INPUT_TOL) -> None:
    # 1e-6 admits user-typed decimals such as 0.7071068; the stored pair is
    # rescaled to unit norm so nothing downstream inherits the slack
    a, b = getattr(obj, na), getattr(obj, nb)
    for name, x in ((na, a), (nb, b)):
        if not (math.isfinite(x) and -tol <= x <= 1 + tol):
            raise ValidationError(f"{name} = {x} outside [0, 1]")
    norm = math.hypot(a, b)
    if abs(norm * norm - 1.0) > tol:
        raise ValidationError(f"{na}^2 + {nb}^2 = {norm * norm:.12g}, expected 1")
    object.__setattr__(obj, na, max(float(a), 0.0) / norm)
    object.__setattr__(obj, nb, max(float(b), 0.0) / norm)


def bell_psi_plus() -> TwoQubitState:
    """Projector onto (|HV> + |VH>)/sqrt(2)."""
    psi = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
    return TwoQubitState(np.outer(psi, psi.conj()))


def target_pure(spec: TargetPureSpec) -> PureQubit:
    return PureQubit(complex(spec.alpha), spec.beta * np.exp(1j * spec.phi))


def perp_ket(spec: TargetPureSpec | TargetMixedSpec) -> np.ndarray:
    """beta e^{-i phi}|H> - alpha|V>, orthogonal to the target ket."""
    return np.array([spec.beta * np.exp(-1j * spec.phi), -spec.alpha], dtype=complex)


def target_mixed(spec: TargetMixedSpec) -> DensityMatrix:
    phi_ket = target_pure(spec.pure_part).vector
    perp = perp_ket(spec)
    overlap = abs(np.vdot(phi_ket, perp))
    if overlap > ALGEBRA_TOL:
        raise ValidationError(f"target and complement overlap by {overlap}")
    return DensityMatrix(spec.p**2 * projector(phi_ket) + spec.q**2 * projector(perp))


def fidelity(rho_o: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Uhlmann fidelity via the qubit closed form tr(rs) + 2 sqrt(det r det s)."""
    r, s = rho_o.mat, rho_b.mat
    overlap = float(np.trace(r @ s).real)
    dets = max(float(det2(r).real), 0.0) * max(float(det2(s).real), 0.0)
    return min(max(overlap + 2.0 * math.sqrt(dets), 0.0), 1.0)


def fidelity_sqrt(rho_o: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Uhlmann fidelity from the square-root definition |tr sqrt(sqrt(s) r sqrt(s))|^2."""
    sb = sqrt_psd2(rho_b.mat)
    inner = sb @ rho_o.mat @ sb
    return float(abs(np.trace(sqrt_psd2(0.5 * (inner + dagger(inner))))) ** 2)


def purity(rho: DensityMatrix) -> float:
    return float(np.trace(rho.mat @ rho.mat).real)


def stokes(rho: DensityMatrix) -> tuple[float, float, float]:
    """(s1, s2, s3) = (<Z>, <X>, <Y>): the H/V, D/A and R/L axes."""
    m = rho.mat
    return (
        float(np.trace(m @ SZ).real),
        float(np.trace(m @ SX).real),
        float(np.trace(m @ SY).real),
    )


def from_stokes(s) -> np.ndarray:
    """Inverse of :func:`stokes`; may be unphysical if ``|s| > 1``."""
    s1, s2, s3 = s
    return 0.5 * (I2 + s1 * SZ + s2 * SX + s3 * SY)
