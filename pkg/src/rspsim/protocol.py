"""Deterministic remote state preparation of polarization qubits.

Alice and Bob share (|HV> + |VH>)/sqrt(2).  Alice sends her photon through
the two-outcome POVM module, then measures it in the {|D>, |A>} basis.  The
two resulting bits tell Bob which Pauli correction turns his photon into the
target.  Mixed targets add a birefringent delay that tags polarization
components with distinguishable arrival-time bins; ignoring the arrival time
traces the bin out and leaves the required mixture.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .linalg import PHYSICS_TOL, dagger, is_unitary
from .povm import ZERO_PROB, PovmPair
from .states import (
    KET_A,
    KET_D,
    SX,
    DensityMatrix,
    TargetMixedSpec,
    TargetPureSpec,
    TwoQubitState,
    bell_psi_plus,
    pauli,
    perp_ket,
)

I2 = np.eye(2, dtype=complex)
EARLY, LATE = 0, 1

# (povm_bit, proj_bit) -> Pauli correction
_CORRECTIONS = {(1, 0): "I", (1, 1): "Z", (0, 0): "X", (0, 1): "Y"}
_ALICE_KETS = (KET_D, KET_A)


class AliceChannel(Protocol):
    def apply_alice(self, rho_ab: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ClassicalMessage:
    """The two classical bits Alice sends.

    ``povm_bit`` is 1 for the exit whose post-measurement state has the
    |HH> + |VV> form and 0 for the |HV> + |VH> form; ``proj_bit`` is 0 for a
    |D> and 1 for an |A> result.
    """

    povm_bit: int
    proj_bit: int

    def __post_init__(self):
        if self.povm_bit not in (0, 1) or self.proj_bit not in (0, 1):
            raise ValueError(f"message bits must be 0/1, got {self}")

    @property
    def label(self) -> str:
        return f"{self.povm_bit}{'DA'[self.proj_bit]}"


ALL_MESSAGES = tuple(ClassicalMessage(m, k) for m in (0, 1) for k in (0, 1))


@dataclass(frozen=True)
class CorrectionOp:
    op: str

    def __post_init__(self):
        if self.op not in ("I", "X", "Y", "Z"):
            raise ValueError(f"correction must be a Pauli, got {self.op!r}")

    @property
    def matrix(self) -> np.ndarray:
        return pauli(self.op)


def correction_for(message: ClassicalMessage) -> CorrectionOp:
    return CorrectionOp(_CORRECTIONS[(message.povm_bit, message.proj_bit)])


@dataclass(frozen=True)
class BranchResult:
    message: ClassicalMessage
    probability: float
    bob_pre: DensityMatrix | None
    correction: CorrectionOp
    bob_post: DensityMatrix | None = None

    @property
    def defined(self) -> bool:
        return self.bob_pre is not None


@dataclass(frozen=True, eq=False)
class VprSettings:
    """Rotator actions as 2x2 unitaries (columns are the images of |H>, |V>).

    ``vpr3`` is ``None`` for the pure-state arrangement.
    """

    vpr1: np.ndarray
    vpr2: np.ndarray
    vpr3: np.ndarray | None = None
    timebins: bool = field(default=False)

    def __post_init__(self):
        for name in ("vpr1", "vpr2", "vpr3"):
            m = getattr(self, name)
            if m is not None and not is_unitary(np.asarray(m, dtype=complex), PHYSICS_TOL):
                raise ValueError(f"{name} is not unitary")


def povm_for_pure(spec: TargetPureSpec) -> PovmPair:
    """M1 = diag(alpha, beta e^{i phi}), M2 = diag(beta e^{i phi}, alpha)."""
    b = spec.beta * np.exp(1j * spec.phi)
    return PovmPair(np.diag([spec.alpha, b]), np.diag([b, spec.alpha]))


def _rotation_to(ket: np.ndarray, column: int) -> np.ndarray:
    """Unitary whose ``column`` maps to ``ket``; the other column is its complement."""
    perp = np.array([-np.conj(ket[1]), np.conj(ket[0])])
    cols = (ket, perp) if column == 0 else (perp, ket)
    return np.column_stack(cols)


def vpr_settings_pure(spec: TargetPureSpec) -> VprSettings:
    """VPR1: |H> -> phi, VPR2: |V> -> phi, with phi the target ket."""
    ket = np.array([spec.alpha, spec.beta * np.exp(1j * spec.phi)])
    return VprSettings(_rotation_to(ket, 0), _rotation_to(ket, 1))


def vpr_settings_mixed(spec: TargetMixedSpec) -> VprSettings:
    """VPR1: |H> -> p|H> + q|V>, VPR2: |V> -> p|H> + q|V>, VPR3: |H> -> phi, |V> -> phi_perp."""
    mix = np.array([spec.p, spec.q], dtype=complex)
    phi_ket = np.array([spec.alpha, spec.beta * np.exp(1j * spec.phi)])
    vpr3 = np.column_stack([phi_ket, perp_ket(spec)])
    return VprSettings(_rotation_to(mix, 0), _rotation_to(mix, 1), vpr3, timebins=True)


def interferometer_kraus(vpr: VprSettings) -> dict[tuple[int, int], np.ndarray]:
    """Path-resolved amplitudes of the module: ``{(port, bin): K}``.

    ``K[out, a]`` is the amplitude for Alice's input polarization ``a`` to
    leave ``port`` (1 or 2) in polarization ``out`` and arrival bin ``bin``.
    Port 2 is the raw exit, i.e. the X-flipped logical frame.  Without the
    delay element only the early bin is populated.
    """
    bins = (EARLY, LATE) if vpr.timebins else (EARLY,)
    ops = {(port, t): np.zeros((2, 2), dtype=complex) for port in (1, 2) for t in bins}
    rotators = (vpr.vpr1, vpr.vpr2)
    for a in (0, 1):  # PBS1: H -> arm 1, V -> arm 2
        pol = rotators[a][:, a]
        if vpr.timebins:
            # delay tags H early and V late; VPR3 then acts within each bin
            per_bin = {t: pol[t] * vpr.vpr3[:, t] for t in bins}
        else:
            per_bin = {EARLY: pol if vpr.vpr3 is None else vpr.vpr3 @ pol}
        for t, vec in per_bin.items():
            # PBS2: arm 1 H and arm 2 V exit at q1; the rest at q2
            ops[(1, t)][a, a] += vec[a]
            ops[(2, t)][1 - a, a] += vec[1 - a]
    return ops


def _trace_bins(joint: np.ndarray) -> np.ndarray:
    # ancilla is the last tensor factor; cross-bin blocks drop out
    return np.einsum("itjt->ij", np.asarray(joint, dtype=complex).reshape(4, 2, 4, 2))


def decohere_timebins(joint: np.ndarray) -> TwoQubitState:
    """Trace out the arrival-time ancilla of an (Alice, Bob, bin) 8x8 state."""
    return TwoQubitState(_trace_bins(joint))


def _tag(kraus_by_bin: dict[int, np.ndarray]) -> np.ndarray:
    """Embed Alice-side operators as the 8x4 map rho_AB -> (A, B, bin)."""
    g = np.zeros((8, 4), dtype=complex)
    for t, k in kraus_by_bin.items():
        ket = np.zeros((2, 1))
        ket[t] = 1.0
        g += np.kron(np.kron(k, I2), ket)
    return g


def post_povm_states(shared: TwoQubitState, vpr: VprSettings, channel: AliceChannel | None = None):
    """Unnormalized two-photon state leaving each exit, bins already traced out.

    Returns ``{port: 4x4 array}`` with traces equal to the exit probabilities.
    """
    rho = shared.mat if channel is None else channel.apply_alice(shared.mat)
    ops = interferometer_kraus(vpr)
    out = {}
    for port in (1, 2):
        g = _tag({t: k for (pt, t), k in ops.items() if pt == port})
        joint = g @ rho @ dagger(g)
        out[port] = _trace_bins(joint)
    return out


def _project_alice(states_by_bit: dict[int, np.ndarray]) -> list[BranchResult]:
    results = []
    for msg in ALL_MESSAGES:
        rho = states_by_bit[msg.povm_bit]
        bra = np.kron(np.conj(_ALICE_KETS[msg.proj_bit])[None, :], I2)  # 2x4
        bob = bra @ rho @ dagger(bra)
        p = float(np.trace(bob).real)
        pre = None
        if p >= ZERO_PROB:
            bob = bob / p
            pre = DensityMatrix(0.5 * (bob + dagger(bob)))
        results.append(BranchResult(msg, max(p, 0.0), pre, correction_for(msg)))
    return results


def alice_stage_pure(
    shared: TwoQubitState, spec: TargetPureSpec, channel: AliceChannel | None = None
) -> list[BranchResult]:
    """Apply {M1, X M2} to Alice's photon, then project it onto |D> / |A>.

    Branches are ordered as :data:`ALL_MESSAGES`; ``bob_post`` is left empty.
    """
    pair = povm_for_pure(spec)
    rho = shared.mat if channel is None else channel.apply_alice(shared.mat)
    ops = {0: pair.m1, 1: SX @ pair.m2}
    states = {}
    for bit, k in ops.items():
        kk = np.kron(k, I2)
        states[bit] = kk @ rho @ dagger(kk)
    return _project_alice(states)


def alice_stage_mixed(
    shared: TwoQubitState, spec: TargetMixedSpec, channel: AliceChannel | None = None
) -> list[BranchResult]:
    """Mixed-target counterpart of :func:`alice_stage_pure` via the time-bin model."""
    by_port = post_povm_states(shared, vpr_settings_mixed(spec), channel)
    # exit q1 yields the |HV>/|VH> form (bit 0), raw q2 the |HH>/|VV> form (bit 1)
    return _project_alice({0: by_port[1], 1: by_port[2]})


def apply_corrections(branches: list[BranchResult]) -> list[BranchResult]:
    out = []
    for br in branches:
        post = None
        if br.bob_pre is not None:
            c = br.correction.matrix
            post = DensityMatrix(c @ br.bob_pre.mat @ dagger(c))
        out.append(BranchResult(br.message, br.probability, br.bob_pre, br.correction, post))
    return out


def run_pure_rsp(
    spec: TargetPureSpec, shared: TwoQubitState | None = None, channel: AliceChannel | None = None
) -> list[BranchResult]:
    shared = bell_psi_plus() if shared is None else shared
    return apply_corrections(alice_stage_pure(shared, spec, channel))


def run_mixed_rsp(
    spec: TargetMixedSpec, shared: TwoQubitState | None = None, channel: AliceChannel | None = None
) -> list[BranchResult]:
    shared = bell_psi_plus() if shared is None else shared
    return apply_corrections(alice_stage_mixed(shared, spec, channel))


def run_rsp(spec, shared=None, channel=None) -> list[BranchResult]:
    """Dispatch on the target type."""
    if isinstance(spec, TargetMixedSpec):
        return run_mixed_rsp(spec, shared, channel)
    return run_pure_rsp(spec, shared, channel)


def bob_average(branches: list[BranchResult]) -> np.ndarray:
    """Bob's unconditional state: the probability-weighted pre-correction mixture."""
    return sum(br.probability * br.bob_pre.mat for br in branches if br.bob_pre is not None)

