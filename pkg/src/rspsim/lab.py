"""Noisy source, interferometer imperfections, seeded shot sampling and CHSH.

Noise enters in the order of the optical bench: Werner noise on the pair
source, then a dephasing channel between the interferometer arms, then
finite-count detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .linalg import ValidationError
from .states import I2, SX, SZ, TwoQubitState, bell_psi_plus

DEFAULT_SEED = 0xC0FFEE
TSIRELSON = 2 * math.sqrt(2)


@dataclass(frozen=True)
class NoiseConfig:
    werner_v: float = 1.0
    interferometer_visibility: float = 1.0
    phase_jitter_std: float = 0.0  # radians
    shots: int = 10_000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("werner_v", "interferometer_visibility"):
            x = getattr(self, name)
            if not (math.isfinite(x) and 0.0 <= x <= 1.0):
                raise ValidationError(f"{name} = {x} outside [0, 1]")
        if not (math.isfinite(self.phase_jitter_std) and self.phase_jitter_std >= 0):
            raise ValidationError("phase_jitter_std must be finite and non-negative")
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValidationError(f"shots must be a positive integer, got {self.shots}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in 64 unsigned bits")

    @property
    def is_ideal(self) -> bool:
        return self.werner_v == 1.0 and self.interferometer_visibility == 1.0 and self.phase_jitter_std == 0.0


def make_rng(seed: int | np.random.Generator | None = DEFAULT_SEED) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(DEFAULT_SEED if seed is None else int(seed)))


def split_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent child generators for concurrent batches, fixed by ``seed``."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def werner_state(v: float) -> TwoQubitState:
    return TwoQubitState(v * bell_psi_plus().mat + (1 - v) * np.eye(4) / 4)


def noisy_source(cfg: NoiseConfig) -> TwoQubitState:
    return werner_state(cfg.werner_v)


@dataclass(frozen=True)
class InterferometerChannel:
    """Loss of coherence between the two arms of the POVM module.

    The arms carry Alice's H and V components, so the channel is dephasing in
    the H/V basis: a relative phase ``delta`` between the arms and a
    visibility ``V`` scale the coherence by ``V e^{i delta}``.  Averaged over
    Gaussian jitter the factor is ``V exp(-std^2 / 2)``.
    """

    visibility: float = 1.0
    jitter_std: float = 0.0

    @property
    def mean_coherence(self) -> float:
        return self.visibility * math.exp(-0.5 * self.jitter_std**2)

    def coherence(self, delta: float | None = None) -> complex:
        if delta is None:
            return complex(self.mean_coherence)
        return self.visibility * np.exp(1j * delta)

    def apply(self, rho: np.ndarray, delta: float | None = None) -> np.ndarray:
        """Act on a single-qubit density matrix given in the arm (H/V) basis."""
        c = self.coherence(delta)
        out = np.array(rho, dtype=complex)
        out[1, 0] *= c
        out[0, 1] *= np.conj(c)
        return out

    def apply_alice(self, rho_ab: np.ndarray, delta: float | None = None) -> np.ndarray:
        c = self.coherence(delta)
        # Alice's H/V coherence lives in the off-diagonal 2x2 blocks
        scale = np.array([[1.0, np.conj(c)], [c, 1.0]])
        return np.asarray(rho_ab, dtype=complex) * np.kron(scale, np.ones((2, 2)))

    def sample_phases(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(0.0, self.jitter_std, size=n)

    @property
    def is_identity(self) -> bool:
        return self.visibility == 1.0 and self.jitter_std == 0.0


def interferometer_channel(cfg: NoiseConfig) -> InterferometerChannel:
    return InterferometerChannel(cfg.interferometer_visibility, cfg.phase_jitter_std)


def calibration_visibility(channel: InterferometerChannel, probe: np.ndarray, target: np.ndarray) -> float:
    """(N_phi - N_perp)/(N_phi + N_perp) for a probe ket sent through the channel.

    ``target`` is the ket the ideal module would output; probabilities are
    exact, i.e. the infinite-count limit of the calibration measurement.
    """
    rho = channel.apply(np.outer(probe, np.conj(probe)))
    t = np.asarray(target, dtype=complex) / np.linalg.norm(target)
    perp = np.array([-np.conj(t[1]), np.conj(t[0])])
    n_phi = float(np.vdot(t, rho @ t).real)
    n_perp = float(np.vdot(perp, rho @ perp).real)
    return (n_phi - n_perp) / (n_phi + n_perp)


@dataclass(frozen=True, eq=False)
class ShotRecord:
    labels: tuple
    counts: np.ndarray

    @property
    def shots(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict:
        return {str(k): int(c) for k, c in zip(self.labels, self.counts)}

    def frequencies(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def sample_shots(
    probabilities: Sequence[float], n: int, seed: int | np.random.Generator = DEFAULT_SEED, labels=None
) -> ShotRecord:
    """Multinomial draw of ``n`` shots; identical seed and inputs give identical counts."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError("probabilities must be a non-negative distribution summing to 1")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    counts = make_rng(seed).multinomial(int(n), p)
    labels = tuple(range(p.size)) if labels is None else tuple(labels)
    return ShotRecord(labels, counts)


def sample_branches(branches, n: int, seed: int | np.random.Generator = DEFAULT_SEED) -> ShotRecord:
    """Sample which of the four classical messages each run produces."""
    return sample_shots([b.probability for b in branches], n, seed, labels=[b.message.label for b in branches])


# --- CHSH -----------------------------------------------------------------


@dataclass(frozen=True)
class CHSHSettings:
    """Linear-analyzer angles (radians) for Alice (a, a2) and Bob (b, b2).

    S = E(a, b) - E(a, b2) + E(a2, b) + E(a2, b2).
    """

    a: float = 0.0
    a2: float = math.pi / 4
    b: float = 3 * math.pi / 8
    b2: float = math.pi / 8

    @property
    def pairs(self) -> tuple[tuple[float, float], ...]:
        return ((self.a, self.b), (self.a, self.b2), (self.a2, self.b), (self.a2, self.b2))


CHSH_SIGNS = (1, -1, 1, 1)


def analyzer(angle: float) -> np.ndarray:
    """+/-1 observable of a linear polarizer at ``angle`` from horizontal."""
    return math.cos(2 * angle) * SZ + math.sin(2 * angle) * SX


def joint_probabilities(rho: np.ndarray, a: float, b: float) -> np.ndarray:
    """Probabilities of outcomes (++, +-, -+, --)."""
    projs = [(I2 + s * analyzer(a)) / 2 for s in (1, -1)]
    projs_b = [(I2 + s * analyzer(b)) / 2 for s in (1, -1)]
    p = np.array([np.trace(rho @ np.kron(pa, pb)).real for pa in projs for pb in projs_b])
    return np.clip(p, 0.0, None) / max(p.sum(), 1e-300)


def correlation(rho: np.ndarray, a: float, b: float) -> float:
    return float(np.trace(rho @ np.kron(analyzer(a), analyzer(b))).real)


def chsh(rho: TwoQubitState, settings: CHSHSettings = CHSHSettings()) -> float:
    return sum(s * correlation(rho.mat, a, b) for s, (a, b) in zip(CHSH_SIGNS, settings.pairs))


@dataclass(frozen=True)
class CHSHEstimate:
    s: float
    stderr: float
    correlations: tuple[float, ...]
    counts: tuple[tuple[int, ...], ...]


def chsh_sampled(
    rho: TwoQubitState,
    shots_per_setting: int,
    seed: int | np.random.Generator = DEFAULT_SEED,
    settings: CHSHSettings = CHSHSettings(),
) -> CHSHEstimate:
    """Coincidence-count estimate of S with the standard error of the four correlators."""
    rng = make_rng(seed)
    es, var, counts = [], 0.0, []
    for a, b in settings.pairs:
        rec = sample_shots(joint_probabilities(rho.mat, a, b), shots_per_setting, rng)
        n = rec.counts
        e = (n[0] - n[1] - n[2] + n[3]) / shots_per_setting
        es.append(float(e))
        var += (1.0 - e * e) / shots_per_setting
        counts.append(tuple(int(c) for c in n))
    s = sum(sg * e for sg, e in zip(CHSH_SIGNS, es))
    return CHSHEstimate(float(s), math.sqrt(var), tuple(es), tuple(counts))


# --- calibration ------------------------------------------------------------


def werner_for_chsh(s_target: float, settings: CHSHSettings = CHSHSettings()) -> float:
    """Invert the linear relation S(v) = v S(1)."""
    s_max = chsh(bell_psi_plus(), settings)
    v = s_target / s_max
    if not 0.0 <= v <= 1.0 + 1e-12:
        raise ValidationError(f"CHSH target {s_target} unreachable (max {s_max:.6f})")
    return min(v, 1.0)


def mean_suite_fidelity(cfg: NoiseConfig, states=None) -> float:
    """Exact mean branch fidelity over the target suite (no sampling)."""
    from .suite import default_manifest, exact_branch_fidelities

    states = default_manifest() if states is None else states
    fids = [f for entry in states for f in exact_branch_fidelities(entry.spec, cfg)]
    return float(np.mean(fids))


def calibrate_to_paper(
    s_target: float | None = None,
    fidelity_target: float | None = None,
    base: NoiseConfig = NoiseConfig(),
    states=None,
    tol: float = 1e-10,
) -> NoiseConfig:
    """Noise configuration reproducing a CHSH value and/or a mean suite fidelity.

    The CHSH target fixes ``werner_v``.  The fidelity target is met by
    bisection on the interferometer visibility with the source held fixed.
    """
    cfg = base
    if s_target is not None:
        cfg = replace(cfg, werner_v=werner_for_chsh(s_target))
    if fidelity_target is None:
        return cfg

    def mean_at(vis: float) -> float:
        return mean_suite_fidelity(replace(cfg, interferometer_visibility=vis), states)

    lo, hi = 0.0, 1.0
    f_lo, f_hi = mean_at(lo), mean_at(hi)
    if not f_lo <= fidelity_target <= f_hi:
        raise ValidationError(
            f"mean fidelity {fidelity_target} unreachable: range [{f_lo:.6f}, {f_hi:.6f}] at werner_v={cfg.werner_v}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mean_at(mid) < fidelity_target:
            lo = mid
        else:
            hi = mid
    return replace(cfg, interferometer_visibility=hi)

