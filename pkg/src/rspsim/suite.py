"""Target manifests and the end-to-end experiment runners behind the CLI."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lab import NoiseConfig, interferometer_channel, noisy_source, split_rngs
from .linalg import ValidationError
from .protocol import BranchResult, run_rsp
from .states import (
    DensityMatrix,
    TargetMixedSpec,
    TargetPureSpec,
    fidelity,
    purity,
    stokes,
    target_mixed,
    target_pure,
)
from .tomography import ReconstructionResult, TomoCounts, measure_bases, mle_reconstruct

MANIFEST_FIELDS = ("label", "kind", "alpha", "beta", "phi_deg", "p", "q")


@dataclass(frozen=True)
class ManifestEntry:
    label: str
    spec: TargetPureSpec | TargetMixedSpec

    @property
    def kind(self) -> str:
        return "mixed" if isinstance(self.spec, TargetMixedSpec) else "pure"


def target_density(spec) -> DensityMatrix:
    if isinstance(spec, TargetMixedSpec):
        return target_mixed(spec)
    return target_pure(spec).density()


def default_manifest() -> list[ManifestEntry]:
    """Eighteen targets: four pure states on each of three longitudes, six mixed.

    Pure states sit at alpha = cos(k pi/16), k = 1..4, on longitudes 0, 120
    and 240 degrees.  Mixed states have p^2 in {0.75, 0.9} and point along
    the k = 2 pure state of each longitude.
    """
    longitudes = [0.0, 2 * math.pi / 3, 4 * math.pi / 3]
    entries = []
    for j, phi in enumerate(longitudes):
        for k in range(1, 5):
            a = math.cos(k * math.pi / 16)
            entries.append(ManifestEntry(f"pure-L{j}-k{k}", TargetPureSpec(a, math.sin(k * math.pi / 16), phi)))
    for j, phi in enumerate(longitudes):
        a, b = math.cos(math.pi / 8), math.sin(math.pi / 8)
        for p2 in (0.75, 0.9):
            spec = TargetMixedSpec(a, b, phi, math.sqrt(p2), math.sqrt(1 - p2))
            entries.append(ManifestEntry(f"mixed-L{j}-p{p2:g}", spec))
    return entries


def _float(row: dict, key: str, default: float | None = None) -> float:
    raw = (row.get(key) or "").strip()
    if not raw:
        if default is None:
            raise ValidationError(f"manifest row {row.get('label', '?')!r} is missing {key}")
        return default
    return float(raw)


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read a CSV manifest with columns label, kind, alpha, beta, phi_deg, p, q.

    ``kind`` is ``pure`` or ``mixed``; ``p``/``q`` are ignored for pure rows.
    """
    entries = []
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if any((v or "").strip() for v in r.values())]
    for i, row in enumerate(rows):
        kind = (row.get("kind") or "").strip().lower()
        label = (row.get("label") or "").strip() or f"state-{i}"
        alpha, beta = _float(row, "alpha"), _float(row, "beta")
        phi = math.radians(_float(row, "phi_deg", 0.0))
        if kind == "pure":
            spec = TargetPureSpec(alpha, beta, phi)
        elif kind == "mixed":
            spec = TargetMixedSpec(alpha, beta, phi, _float(row, "p"), _float(row, "q"))
        else:
            raise ValidationError(f"manifest row {label!r}: kind must be 'pure' or 'mixed'")
        entries.append(ManifestEntry(label, spec))
    if not entries:
        raise ValidationError(f"manifest {path} has no states")
    return entries


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MANIFEST_FIELDS)
        for e in entries:
            s = e.spec
            p, q = (s.p, s.q) if e.kind == "mixed" else ("", "")
            w.writerow([e.label, e.kind, repr(s.alpha), repr(s.beta), repr(math.degrees(s.phi)), p, q])


def noisy_branches(spec, cfg: NoiseConfig) -> list[BranchResult]:
    channel = interferometer_channel(cfg)
    return run_rsp(spec, noisy_source(cfg), None if channel.is_identity else channel)


def exact_branch_fidelities(spec, cfg: NoiseConfig) -> list[float]:
    """Fidelity of each corrected branch with the target, without sampling."""
    target = target_density(spec)
    return [fidelity(b.bob_post, target) for b in noisy_branches(spec, cfg)]


@dataclass
class BranchOutcome:
    label: str
    correction: str
    probability: float
    ideal_fidelity: float
    exact_fidelity: float
    bob_exact: DensityMatrix | None = None
    counts: TomoCounts | None = None
    reconstruction: ReconstructionResult | None = None
    tomography_fidelity: float | None = None


@dataclass
class StateOutcome:
    entry: ManifestEntry
    branches: list[BranchOutcome]

    @property
    def target(self) -> DensityMatrix:
        return target_density(self.entry.spec)

    def mean_reconstruction(self) -> DensityMatrix:
        mats = [b.reconstruction.rho_hat.mat * b.probability for b in self.branches if b.reconstruction]
        total = sum(b.probability for b in self.branches if b.reconstruction)
        return DensityMatrix(sum(mats) / total)


def run_state(entry: ManifestEntry, cfg: NoiseConfig, rngs, tomography: bool = True) -> StateOutcome:
    """Ideal and noisy protocol runs for one target, plus per-branch tomography."""
    target = target_density(entry.spec)
    ideal = run_rsp(entry.spec)
    noisy = noisy_branches(entry.spec, cfg)
    out = []
    for k, (bi, bn) in enumerate(zip(ideal, noisy)):
        bo = BranchOutcome(
            label=bn.message.label,
            correction=bn.correction.op,
            probability=bn.probability,
            ideal_fidelity=fidelity(bi.bob_post, target),
            exact_fidelity=fidelity(bn.bob_post, target),
            bob_exact=bn.bob_post,
        )
        if tomography:
            counts = measure_bases(bn.bob_post, cfg.shots, rngs[k])
            rec = mle_reconstruct(counts)
            bo.counts, bo.reconstruction = counts, rec
            bo.tomography_fidelity = fidelity(rec.rho_hat, target)
        out.append(bo)
    return StateOutcome(entry, out)


def run_suite(
    entries: list[ManifestEntry], cfg: NoiseConfig, tomography: bool = True, workers: int = 1
) -> list[StateOutcome]:
    """Run every target; results come back in manifest order whatever ``workers`` is."""
    rngs = split_rngs(cfg.seed, 4 * len(entries))
    jobs = [(e, rngs[4 * i : 4 * i + 4]) for i, e in enumerate(entries)]
    if workers <= 1:
        return [run_state(e, cfg, r, tomography) for e, r in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: run_state(job[0], cfg, job[1], tomography), jobs))


def poincare_rows(outcomes: list[StateOutcome]) -> list[dict]:
    """One row per state: Stokes vector and purity of the reconstructed state."""
    rows = []
    for so in outcomes:
        rho = so.mean_reconstruction()
        s1, s2, s3 = stokes(rho)
        fids = [b.tomography_fidelity for b in so.branches]
        rows.append(
            dict(label=so.entry.label, s1=s1, s2=s2, s3=s3, purity=purity(rho), fidelity=float(np.mean(fids)))
        )
    return rows
