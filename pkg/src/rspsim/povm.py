"""Two-outcome POVMs on a polarization qubit and their interferometric realization.

The module is a polarizing Mach-Zehnder: PBS1 sends |H> into arm 1 and |V>
into arm 2, a variable polarization rotator (VPR) sits in each arm, and PBS2
recombines the arms into exits q1 and q2.  An entrance unitary ``v`` and exit
unitaries ``u1`` / ``u2`` (with a NOT at q2) turn the diagonal operators

    D1 = diag(cos zeta, sin xi e^{i sigma}),  D2 = diag(sin zeta e^{i theta}, cos xi)

into any pair {M1, M2} with M1^dag M1 + M2^dag M2 = I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    PHYSICS_TOL,
    ValidationError,
    as_matrix,
    dagger,
    is_psd,
    is_unitary,
    max_abs,
    svd2,
)
from .states import SX, DensityMatrix, PureQubit

W_TOL = 1e-9
ZERO_PROB = 1e-14

LOGICAL = "logical"
PHYSICAL = "physical"


class PovmError(ValidationError):
    """Raised for incomplete POVMs or module settings that cannot realize them."""


@dataclass(frozen=True, eq=False)
class PovmPair:
    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m1", as_matrix(self.m1, 2))
        object.__setattr__(self, "m2", as_matrix(self.m2, 2))

    @property
    def elements(self) -> tuple[np.ndarray, np.ndarray]:
        """The POVM elements E_m = M_m^dag M_m."""
        return dagger(self.m1) @ self.m1, dagger(self.m2) @ self.m2

    def operator(self, m: int) -> np.ndarray:
        if m == 1:
            return self.m1
        if m == 2:
            return self.m2
        raise ValueError(f"outcome index must be 1 or 2, got {m}")


@dataclass(frozen=True)
class PovmReport:
    ok: bool
    deviation: float
    elements_psd: bool
    tol: float

    def __bool__(self) -> bool:
        return self.ok


def validate_povm(pair: PovmPair, tol: float = PHYSICS_TOL) -> PovmReport:
    """Check completeness ``||E1 + E2 - I||_inf <= tol`` and positivity of each E_m."""
    e1, e2 = pair.elements
    deviation = max_abs(e1 + e2 - np.eye(2))
    psd = is_psd(e1, tol) and is_psd(e2, tol)
    return PovmReport(ok=deviation <= tol and psd, deviation=deviation, elements_psd=psd, tol=tol)


@dataclass(frozen=True)
class MeasurementOutcome:
    index: int
    probability: float
    post_state: DensityMatrix | None

    @property
    def defined(self) -> bool:
        return self.post_state is not None


def apply_measurement(rho: DensityMatrix, pair: PovmPair, m: int) -> MeasurementOutcome:
    """Outcome ``m`` of the measurement: p_m = tr(E_m rho), rho_m = M rho M^dag / p_m.

    The post-measurement state is ``None`` when p_m < 1e-14.
    """
    op = pair.operator(m)
    unnorm = op @ rho.mat @ dagger(op)
    p = float(np.trace(unnorm).real)
    if p < ZERO_PROB:
        return MeasurementOutcome(m, max(p, 0.0), None)
    unnorm = unnorm / p
    return MeasurementOutcome(m, p, DensityMatrix(0.5 * (unnorm + dagger(unnorm))))


@dataclass(frozen=True, eq=False)
class ModuleSettings:
    """Physical parameters of the interferometric module.

    ``w`` is the diagonal phase matrix relating the right singular vectors of
    the two operators (V2 = W V1); it is bookkeeping, already folded into ``u2``.
    """

    v: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    zeta: float
    xi: float
    theta: float = 0.0
    sigma: float = 0.0
    w: np.ndarray | None = None

    def __post_init__(self):
        for name in ("v", "u1", "u2"):
            m = as_matrix(getattr(self, name), 2)
            if not is_unitary(m, PHYSICS_TOL):
                raise PovmError(f"{name} is not unitary")
            object.__setattr__(self, name, m)
        for name in ("zeta", "xi", "theta", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise PovmError(f"{name} is not finite")
        for name in ("zeta", "xi"):
            x = getattr(self, name)
            if not -PHYSICS_TOL <= x <= math.pi / 2 + PHYSICS_TOL:
                raise PovmError(f"{name} = {x} outside [0, pi/2]")

    @classmethod
    def bare(cls, zeta, xi, theta=0.0, sigma=0.0) -> "ModuleSettings":
        """Module with identity entrance and exit unitaries."""
        eye = np.eye(2, dtype=complex)
        return cls(eye, eye, eye, zeta, xi, theta, sigma)


def diagonal_operators(zeta, xi, theta=0.0, sigma=0.0) -> tuple[np.ndarray, np.ndarray]:
    d1 = np.diag([math.cos(zeta), math.sin(xi) * np.exp(1j * sigma)])
    d2 = np.diag([math.sin(zeta) * np.exp(1j * theta), math.cos(xi)])
    return d1.astype(complex), d2.astype(complex)


def effective_operators(settings: ModuleSettings, frame: str = LOGICAL) -> PovmPair:
    """Operators realized at exits q1 and q2.

    In the logical frame K2 = u2 D2 v (the exit NOT already undone); the
    physical-port frame is K2 = X u2 D2 v.
    """
    d1, d2 = diagonal_operators(settings.zeta, settings.xi, settings.theta, settings.sigma)
    k1 = settings.u1 @ d1 @ settings.v
    k2 = settings.u2 @ d2 @ settings.v
    if frame == PHYSICAL:
        k2 = SX @ k2
    elif frame != LOGICAL:
        raise ValueError(f"unknown frame {frame!r}")
    return PovmPair(k1, k2)


def _complete_column(c: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to the unit 2-vector ``c``, leading entry real >= 0."""
    col = np.array([-np.conj(c[1]), np.conj(c[0])])
    lead = col[0] if abs(col[0]) > 1e-14 else col[1]
    return col * (np.conj(lead) / abs(lead))


def _unit_phases(diag: np.ndarray) -> np.ndarray:
    mag = np.abs(diag)
    out = np.ones(diag.shape, dtype=complex)
    keep = mag > 1e-14
    out[keep] = diag[keep] / mag[keep]
    return out


def _synthesize_diagonal(pair: PovmPair) -> ModuleSettings:
    # identity entrance, phases carried by the exit unitaries; moduli read off
    # unsorted so zeta belongs to H and xi to V
    a, b = np.diag(pair.m1), np.diag(pair.m2)
    zeta = math.atan2(abs(b[0]), abs(a[0]))
    xi = math.atan2(abs(a[1]), abs(b[1]))
    return ModuleSettings(
        v=np.eye(2, dtype=complex),
        u1=np.diag(_unit_phases(a)),
        u2=np.diag(_unit_phases(b)),
        zeta=zeta,
        xi=xi,
        w=np.eye(2, dtype=complex),
    )


def _is_diagonal(m: np.ndarray, tol: float = 1e-12) -> bool:
    return abs(m[0, 1]) <= tol and abs(m[1, 0]) <= tol


def synthesize_module(pair: PovmPair) -> ModuleSettings:
    """Find module settings whose effective operators equal ``pair``.

    M1 = U1 D1 V1 by SVD.  Completeness forces M2 = U2' D2 W V1 with W a
    diagonal unitary; the exit unitaries are u1 = U1 and u2 = U2' W.
    """
    report = validate_povm(pair, PHYSICS_TOL)
    if not report:
        raise PovmError(f"POVM incomplete: deviation {report.deviation:.3g}, psd={report.elements_psd}")

    if _is_diagonal(pair.m1) and _is_diagonal(pair.m2):
        return _synthesize_diagonal(pair)

    v1 = _shared_right_basis(pair)
    # Columns of M_k V1^dag are orthogonal (completeness) and equal the columns
    # of u_k scaled by the diagonal entries.  Norms are used directly since
    # sqrt(1 - s^2) loses half the digits when s is close to 1.
    b1, b2 = pair.m1 @ dagger(v1), pair.m2 @ dagger(v1)
    s, d2 = np.linalg.norm(b1, axis=0), np.linalg.norm(b2, axis=0)
    u1, u2 = _exit_unitary(b1, s), _exit_unitary(b2, d2)

    w = _phase_matrix(pair.m2, v1, d2)
    zeta = math.atan2(d2[0], s[0])
    xi = math.atan2(s[1], d2[1])
    return ModuleSettings(v=v1, u1=u1, u2=u2, zeta=zeta, xi=xi, theta=0.0, sigma=0.0, w=w)


def _shared_right_basis(pair: PovmPair) -> np.ndarray:
    """Right singular vectors common to M1 and M2, ordered by decreasing s(M1).

    Both operators diagonalize M1^dag M1 = I - M2^dag M2.  The one with the
    smaller norm determines that basis to better absolute precision.
    """
    if np.linalg.norm(pair.m1, 2) <= np.linalg.norm(pair.m2, 2):
        return svd2(pair.m1)[2]
    v = svd2(pair.m2)[2]
    return v[::-1, :]


def _exit_unitary(b: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Unitary whose columns, scaled by ``norms``, reproduce ``b``.

    The longer column fixes the basis; the other is its orthogonal complement
    with the phase of the matching column of ``b``.
    """
    if norms.max() <= 1e-14:
        return np.eye(2, dtype=complex)
    k = int(np.argmax(norms))
    u2 = np.zeros((2, 2), dtype=complex)
    u2[:, k] = b[:, k] / norms[k]
    perp = _complete_column(u2[:, k])
    overlap = np.vdot(perp, b[:, 1 - k])
    if abs(overlap) > 1e-14:
        perp = perp * (overlap / abs(overlap))
    u2[:, 1 - k] = perp
    return u2


def _phase_matrix(m2: np.ndarray, v1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """W = V2 V1^dag from an independent SVD of M2, aligned to the D2 ordering."""
    _, d2raw, v2 = svd2(m2)
    sv = np.diag(d2raw).real
    if abs(d2[0] - d2[1]) < 1e-6:
        # degenerate: any V2 works, choose V2 = V1
        return np.eye(2, dtype=complex)
    perm = [0, 1] if np.abs(sv - d2).max() <= np.abs(sv[::-1] - d2).max() else [1, 0]
    v2 = v2[perm, :]
    w = v2 @ dagger(v1)
    off = max(abs(w[0, 1]), abs(w[1, 0]))
    if off > W_TOL or not is_unitary(w, W_TOL):
        raise PovmError(f"W = V2 V1^dag is not diagonal unitary (off-diagonal {off:.3g})")
    return np.diag(np.diag(w))


@dataclass(frozen=True)
class ModuleBranch:
    """Unnormalized output amplitude at one exit port."""

    port: int
    amplitude: np.ndarray

    @property
    def probability(self) -> float:
        return float(np.vdot(self.amplitude, self.amplitude).real)

    def state(self) -> DensityMatrix | None:
        p = self.probability
        if p < ZERO_PROB:
            return None
        return DensityMatrix.from_ket(self.amplitude / math.sqrt(p))


def simulate_module(settings: ModuleSettings, psi: PureQubit, frame: str = LOGICAL) -> tuple[ModuleBranch, ModuleBranch]:
    """Propagate a pure input through the module path by path.

    PBS1 routes H into arm 1 and V into arm 2; each VPR rotates its arm's
    polarization; PBS2 sends arm-1 H and arm-2 V to q1, arm-1 V and arm-2 H to
    q2.  The NOT at q2 restores the logical polarization labels.
    """
    a, b = settings.v @ psi.vector
    z, x, th, sg = settings.zeta, settings.xi, settings.theta, settings.sigma
    # VPR1: H -> cos z H + sin z e^{i th} V ; VPR2: V -> cos x H + sin x e^{i sg} V
    arm1 = a * np.array([math.cos(z), math.sin(z) * np.exp(1j * th)])
    arm2 = b * np.array([math.cos(x), math.sin(x) * np.exp(1j * sg)])
    q1 = np.array([arm1[0], arm2[1]])
    q2_raw = np.array([arm2[0], arm1[1]])
    q2 = SX @ q2_raw
    out1 = settings.u1 @ q1
    out2 = settings.u2 @ q2
    if frame == PHYSICAL:
        out2 = SX @ out2
    elif frame != LOGICAL:
        raise ValueError(f"unknown frame {frame!r}")
    return ModuleBranch(1, out1), ModuleBranch(2, out2)
