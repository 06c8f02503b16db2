"""Single-qubit polarization tomography.

Three analyzer bases (HV, DA, RL) with two detectors each.  Estimates are
formed by linear (Stokes) inversion and refined by maximum likelihood over
the Cholesky-style parametrization rho = T^dag T / tr(T^dag T), with T lower
triangular and four real parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lab import DEFAULT_SEED, make_rng
from .linalg import ValidationError, dagger, herm_eig2
from .states import (
    KET_A,
    KET_D,
    KET_H,
    KET_L,
    KET_R,
    KET_V,
    DensityMatrix,
    fidelity,
    from_stokes,
    projector,
)

BASES = ("HV", "DA", "RL")
BASIS_KETS = {"HV": (KET_H, KET_V), "DA": (KET_D, KET_A), "RL": (KET_R, KET_L)}
PLUS_PROJECTORS = np.array([projector(BASIS_KETS[b][0]) for b in BASES])

INIT_FLOOR = 1e-6
LL_TOL = 1e-10
MAX_ITER = 10_000

# derivative of T with respect to each real parameter
_DT = np.zeros((4, 2, 2), dtype=complex)
_DT[0, 0, 0] = 1
_DT[1, 1, 1] = 1
_DT[2, 1, 0] = 1
_DT[3, 1, 0] = 1j


@dataclass(frozen=True)
class TomoCounts:
    hv: tuple[int, int]
    da: tuple[int, int]
    rl: tuple[int, int]

    def __post_init__(self):
        for name in ("hv", "da", "rl"):
            pair = tuple(int(x) for x in getattr(self, name))
            if len(pair) != 2 or min(pair) < 0:
                raise ValidationError(f"{name} counts must be two non-negative integers")
            object.__setattr__(self, name, pair)

    @classmethod
    def from_sequence(cls, seq) -> "TomoCounts":
        n = [int(x) for x in seq]
        if len(n) != 6:
            raise ValidationError("expected six counts: H V D A R L")
        return cls((n[0], n[1]), (n[2], n[3]), (n[4], n[5]))

    def as_array(self) -> np.ndarray:
        """Shape (3, 2): rows HV, DA, RL; columns (plus, minus)."""
        return np.array([self.hv, self.da, self.rl], dtype=float)

    def as_list(self) -> list[int]:
        return [*self.hv, *self.da, *self.rl]


def measure_bases(rho: DensityMatrix, shots_per_basis: int, seed=DEFAULT_SEED) -> TomoCounts:
    """Binomial detection statistics for each analyzer basis."""
    rng = make_rng(seed)
    out = []
    for proj in PLUS_PROJECTORS:
        p_plus = min(max(float(np.trace(rho.mat @ proj).real), 0.0), 1.0)
        n_plus = int(rng.binomial(shots_per_basis, p_plus))
        out.append((n_plus, shots_per_basis - n_plus))
    return TomoCounts(*out)


def _check_nonempty(counts: TomoCounts) -> np.ndarray:
    n = counts.as_array()
    if np.any(n.sum(axis=1) <= 0):
        raise ValidationError("every basis needs at least one count")
    return n


def stokes_estimate(counts: TomoCounts) -> np.ndarray:
    n = _check_nonempty(counts)
    return (n[:, 0] - n[:, 1]) / n.sum(axis=1)


def linear_inversion(counts: TomoCounts) -> np.ndarray:
    """rho = (I + s1 Z + s2 X + s3 Y)/2 from count ratios; may be unphysical."""
    return from_stokes(stokes_estimate(counts))


def rho_from_params(t: np.ndarray) -> np.ndarray:
    tm = np.array([[t[0], 0.0], [t[2] + 1j * t[3], t[1]]], dtype=complex)
    a = dagger(tm) @ tm
    return a / np.trace(a).real


def params_from_rho(rho: np.ndarray) -> np.ndarray:
    """Parameters reproducing a full-rank ``rho`` (inverse of :func:`rho_from_params`)."""
    t1 = math.sqrt(max(rho[1, 1].real, 0.0))
    c = rho[1, 0] / t1 if t1 > 0 else 0.0
    t0 = math.sqrt(max(rho[0, 0].real - abs(c) ** 2, 0.0))
    return np.array([t0, t1, c.real, c.imag])


def initial_params(counts: TomoCounts) -> np.ndarray:
    """Linear-inversion estimate with eigenvalues floored at 1e-6."""
    w, q = herm_eig2(linear_inversion(counts))
    w = np.clip(w, INIT_FLOOR, None)
    w = w / w.sum()
    return params_from_rho(q @ np.diag(w) @ dagger(q))


def _plus_probabilities(t: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    tm = np.array([[t[0], 0.0], [t[2] + 1j * t[3], t[1]]], dtype=complex)
    a = dagger(tm) @ tm
    norm = float(np.trace(a).real)
    f = np.einsum("ij,bji->b", a, PLUS_PROJECTORS).real
    return f / norm, f, norm


def log_likelihood(t: np.ndarray, counts: TomoCounts) -> float:
    n = counts.as_array()
    p, _, norm = _plus_probabilities(t)
    if norm <= 0:
        return -math.inf
    total = 0.0
    for (n_plus, n_minus), pk in zip(n, p):
        for count, prob in ((n_plus, pk), (n_minus, 1.0 - pk)):
            if count > 0:
                if prob <= 0:
                    return -math.inf
                total += count * math.log(prob)
    return total


def log_likelihood_gradient(t: np.ndarray, counts: TomoCounts) -> np.ndarray:
    n = counts.as_array()
    tm = np.array([[t[0], 0.0], [t[2] + 1j * t[3], t[1]]], dtype=complex)
    p, f, norm = _plus_probabilities(t)
    p = np.clip(p, 1e-300, 1 - 1e-16)
    # d tr(T Pi T^dag)/dt_j = 2 Re tr(dT_j Pi T^dag)
    df = 2 * np.einsum("jab,kbc,ca->kj", _DT, PLUS_PROJECTORS, dagger(tm)).real
    dnorm = 2 * np.einsum("jab,ba->j", _DT, dagger(tm)).real
    dp = (df * norm - f[:, None] * dnorm[None, :]) / norm**2
    weight = n[:, 0] / p - n[:, 1] / (1 - p)
    return weight @ dp


@dataclass(frozen=True)
class ReconstructionResult:
    rho_hat: DensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool
    history: tuple[float, ...] = ()
    method: str = "gradient"


def _finish(t, counts, iterations, converged, history, method) -> ReconstructionResult:
    rho = rho_from_params(t)
    rho = 0.5 * (rho + dagger(rho))
    return ReconstructionResult(
        DensityMatrix(rho), log_likelihood(t, counts), iterations, converged, tuple(history), method
    )


def _ascent(counts: TomoCounts, t: np.ndarray, max_iter: int, tol: float):
    """Quasi-Newton (BFGS) ascent with Armijo backtracking; every accepted step increases L."""
    f = log_likelihood(t, counts)
    g = log_likelihood_gradient(t, counts)
    h = np.eye(4)
    history = [f]
    for it in range(1, max_iter + 1):
        if not np.any(g):
            return t, it - 1, True, history
        d = h @ g
        slope = float(g @ d)
        if slope <= 0:
            h = np.eye(4)
            d, slope = g, float(g @ g)
        step = 1.0
        while True:
            t_new = t + step * d
            f_new = log_likelihood(t_new, counts)
            if f_new >= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-20:
                return t, it - 1, True, history
        g_new = log_likelihood_gradient(t_new, counts)
        s, y = t_new - t, g_new - g
        sy = -float(s @ y)  # curvature of -L
        if sy > 1e-18:
            rho_ = 1.0 / sy
            m = np.eye(4) + rho_ * np.outer(s, y)
            h = m @ h @ m.T + rho_ * np.outer(s, s)
        improvement = f_new - f
        t, f, g = t_new, f_new, g_new
        history.append(f)
        if improvement < tol:
            return t, it, True, history
    return t, max_iter, False, history


def _compass(counts: TomoCounts, t: np.ndarray, max_iter: int, tol: float):
    """Derivative-free coordinate search; steps are accepted only if L increases."""
    f = log_likelihood(t, counts)
    history = [f]
    step = 0.1 * max(np.linalg.norm(t), 1e-3)
    directions = np.vstack([np.eye(4), -np.eye(4)])
    it = 0
    while it < max_iter:
        it += 1
        improved = False
        for d in directions:
            cand = t + step * d
            fc = log_likelihood(cand, counts)
            if fc > f:
                t, f = cand, fc
                history.append(f)
                improved = True
                break
        if not improved:
            step *= 0.5
            if step < tol:
                return t, it, True, history
    return t, it, False, history


def mle_reconstruct(
    counts: TomoCounts, method: str = "gradient", max_iter: int = MAX_ITER, tol: float = LL_TOL
) -> ReconstructionResult:
    """Maximum-likelihood density matrix for binomial counts in the three bases."""
    _check_nonempty(counts)
    t0 = initial_params(counts)
    if method == "gradient":
        t, it, ok, hist = _ascent(counts, t0, max_iter, tol)
    elif method == "coordinate":
        t, it, ok, hist = _compass(counts, t0, max_iter * 50, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _finish(t, counts, it, ok, hist, method)


def report_fidelity(rho_hat: DensityMatrix, target: DensityMatrix) -> float:
    return fidelity(rho_hat, target)
