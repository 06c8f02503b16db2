"""Command-line entry point: ``python -m rspsim <command> [options]``.

Angles are given in degrees on the command line and converted to radians
internally.  Exit codes: 0 success, 2 invalid configuration, 3 numerical
failure (only with ``--strict``).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .lab import (
    DEFAULT_SEED,
    CHSHSettings,
    NoiseConfig,
    calibrate_to_paper,
    chsh,
    chsh_sampled,
    noisy_source,
    split_rngs,
    werner_for_chsh,
)
from .linalg import ValidationError
from .povm import PovmPair, effective_operators, synthesize_module, validate_povm
from .report import density_to_json, dumps, make_report, noise_to_json, write_csv
from .states import TargetMixedSpec, TargetPureSpec, fidelity, purity, stokes
from .suite import (
    ManifestEntry,
    StateOutcome,
    default_manifest,
    load_manifest,
    poincare_rows,
    run_state,
    run_suite,
    target_density,
)
from .tomography import TomoCounts, measure_bases, mle_reconstruct

log = logging.getLogger("rspsim")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

REPORTED_CHSH = 2.6640
REPORTED_MEAN_FIDELITY = 0.9947

GRID_FIELDS = ("label", "kind", "branch", "correction", "probability", "exact_fidelity", "tomography_fidelity")
POINCARE_FIELDS = ("label", "s1", "s2", "s3", "purity", "fidelity")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("noise and sampling")
    g.add_argument("--seed", type=_u64, default=DEFAULT_SEED, help="RNG seed, decimal or 0x hex (default 0xC0FFEE)")
    g.add_argument("--shots", type=int, default=10_000, help="shots per tomography basis or CHSH setting")
    g.add_argument("--werner-v", type=float, default=1.0, help="Werner weight of the pair source")
    g.add_argument("--visibility", type=float, default=1.0, help="interferometer visibility")
    g.add_argument("--phase-jitter-deg", type=float, default=0.0, help="std of the arm phase jitter, degrees")
    p.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    p.add_argument("--strict", action="store_true", help="exit 3 if an optimizer fails to converge")


def _target_args(p: argparse.ArgumentParser, mixed: bool) -> None:
    g = p.add_argument_group("target")
    g.add_argument("--alpha", type=float, required=True, help="amplitude of |H>")
    g.add_argument("--beta", type=float, required=True, help="modulus of the |V> amplitude")
    g.add_argument("--phi-deg", type=float, default=0.0, help="relative phase of |V>, degrees")
    if mixed:
        g.add_argument("--p", type=float, required=True, help="weight amplitude of the target direction")
        g.add_argument("--q", type=float, required=True, help="weight amplitude of the orthogonal direction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rspsim", description="Remote state preparation simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rsp-pure", help="prepare one pure target state")
    _target_args(p, mixed=False)
    _common(p)

    p = sub.add_parser("rsp-mixed", help="prepare one mixed target state")
    _target_args(p, mixed=True)
    _common(p)

    p = sub.add_parser("paper-suite", help="18-state benchmark with tomography")
    _common(p)
    p.add_argument("--manifest", type=Path, help="CSV of targets (label, kind, alpha, beta, phi_deg, p, q)")
    p.add_argument(
        "--calibrate",
        action="store_true",
        help=f"fit the interferometer visibility so the exact mean fidelity is {REPORTED_MEAN_FIDELITY}",
    )
    p.add_argument("--grid-csv", type=Path, help="fidelity table (default: next to --out)")
    p.add_argument("--poincare-csv", type=Path, help="Stokes coordinates per state (default: next to --out)")
    p.add_argument("--workers", type=int, default=1, help="states processed concurrently")

    p = sub.add_parser("povm-check", help="validate a POVM pair and synthesize module settings")
    p.add_argument("pair_file", type=Path, help="16 numbers: M1 then M2, row-major (re, im) pairs")
    p.add_argument("--out", type=Path)
    p.add_argument("--strict", action="store_true")

    p = sub.add_parser("chsh", help="analytic and sampled CHSH value of the source")
    _common(p)
    p.add_argument("--target-s", type=float, help=f"set --werner-v to reproduce this S (e.g. {REPORTED_CHSH})")

    p = sub.add_parser("tomo", help="maximum-likelihood reconstruction from counts")
    _common(p)
    p.add_argument("--counts", type=int, nargs=6, metavar="N", help="counts H V D A R L")
    p.add_argument("--alpha", type=float, help="simulate counts from this target instead")
    p.add_argument("--beta", type=float)
    p.add_argument("--phi-deg", type=float, default=0.0, help="relative phase, degrees")
    p.add_argument("--method", choices=("gradient", "coordinate"), default="gradient")
    return parser


def noise_from_args(args) -> NoiseConfig:
    return NoiseConfig(
        werner_v=args.werner_v,
        interferometer_visibility=args.visibility,
        phase_jitter_std=math.radians(args.phase_jitter_deg),
        shots=args.shots,
        seed=args.seed,
    )


def _spec_json(spec) -> dict:
    out = {"alpha": spec.alpha, "beta": spec.beta, "phi_rad": spec.phi}
    if isinstance(spec, TargetMixedSpec):
        out.update(p=spec.p, q=spec.q)
    return out


def _state_json(so: StateOutcome) -> dict:
    target = so.target
    branches = []
    for b in so.branches:
        rec = b.reconstruction
        branches.append(
            {
                "message": b.label,
                "correction": b.correction,
                "probability": b.probability,
                "ideal_fidelity": b.ideal_fidelity,
                "exact_fidelity": b.exact_fidelity,
                "tomography_fidelity": b.tomography_fidelity,
                "rho_exact": density_to_json(b.bob_exact),
                "rho_hat": density_to_json(rec.rho_hat) if rec else None,
                "counts": b.counts.as_list() if b.counts else None,
                "mle": {"converged": rec.converged, "iterations": rec.iterations, "log_likelihood": rec.log_likelihood}
                if rec
                else None,
            }
        )
    tomo = [b.tomography_fidelity for b in so.branches if b.tomography_fidelity is not None]
    rho_mean = so.mean_reconstruction() if tomo else None
    return {
        "label": so.entry.label,
        "kind": so.entry.kind,
        "target": _spec_json(so.entry.spec),
        "rho_target": density_to_json(target),
        "target_stokes": list(stokes(target)),
        "branches": branches,
        "mean_exact_fidelity": float(np.mean([b.exact_fidelity for b in so.branches])),
        "mean_fidelity": float(np.mean(tomo)) if tomo else None,
        "reconstructed_stokes": list(stokes(rho_mean)) if rho_mean else None,
    }


def _nonconverged(outcomes: list[StateOutcome]) -> list[str]:
    return [
        f"{so.entry.label}/{b.label}"
        for so in outcomes
        for b in so.branches
        if b.reconstruction is not None and not b.reconstruction.converged
    ]


def _emit(report: dict, out: Path | None) -> None:
    text = dumps(report)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        log.info("report written to %s", out)


def cmd_rsp(args, mixed: bool):
    cfg = noise_from_args(args)
    phi = math.radians(args.phi_deg)
    if mixed:
        spec = TargetMixedSpec(args.alpha, args.beta, phi, args.p, args.q)
    else:
        spec = TargetPureSpec(args.alpha, args.beta, phi)
    entry = ManifestEntry("target", spec)
    so = run_state(entry, cfg, split_rngs(cfg.seed, 4))
    body = {"config": noise_to_json(cfg), "state": _state_json(so)}
    body["mean_fidelity"] = body["state"]["mean_fidelity"]
    body["mean_exact_fidelity"] = body["state"]["mean_exact_fidelity"]
    return body, _nonconverged([so])


def cmd_paper_suite(args):
    cfg = noise_from_args(args)
    entries = load_manifest(args.manifest) if args.manifest else default_manifest()
    calibration = None
    if args.calibrate:
        cfg = calibrate_to_paper(fidelity_target=REPORTED_MEAN_FIDELITY, base=cfg, states=entries)
        calibration = {"fidelity_target": REPORTED_MEAN_FIDELITY, "knob": "interferometer_visibility"}
        log.info("calibrated visibility %.10f", cfg.interferometer_visibility)
    outcomes = run_suite(entries, cfg, workers=args.workers)
    states = [_state_json(so) for so in outcomes]
    tomo = [b.tomography_fidelity for so in outcomes for b in so.branches]
    exact = [b.exact_fidelity for so in outcomes for b in so.branches]
    body = {
        "config": noise_to_json(cfg),
        "calibration": calibration,
        "manifest": str(args.manifest) if args.manifest else "default",
        "states": states,
        "mean_fidelity": float(np.mean(tomo)),
        "min_fidelity": float(np.min(tomo)),
        "mean_exact_fidelity": float(np.mean(exact)),
        "n_states": len(outcomes),
    }
    grid = [
        {
            "label": so.entry.label,
            "kind": so.entry.kind,
            "branch": b.label,
            "correction": b.correction,
            "probability": b.probability,
            "exact_fidelity": b.exact_fidelity,
            "tomography_fidelity": b.tomography_fidelity,
        }
        for so in outcomes
        for b in so.branches
    ]
    stem = args.out.with_suffix("") if args.out else None
    grid_path = args.grid_csv or (Path(f"{stem}.fidelity.csv") if stem else None)
    poincare_path = args.poincare_csv or (Path(f"{stem}.poincare.csv") if stem else None)
    if grid_path:
        write_csv(grid, grid_path, GRID_FIELDS)
    if poincare_path:
        write_csv(poincare_rows(outcomes), poincare_path, POINCARE_FIELDS)
    return body, _nonconverged(outcomes)


def read_pair_file(path: Path) -> PovmPair:
    """Sixteen whitespace/comma separated numbers: (re, im) pairs, M1 then M2, row-major."""
    raw = path.read_text().replace(",", " ").split()
    try:
        vals = [float(x) for x in raw]
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    if len(vals) != 16:
        raise ValidationError(f"{path}: expected 16 numbers, found {len(vals)}")
    z = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    return PovmPair(z[:4].reshape(2, 2), z[4:].reshape(2, 2))


def cmd_povm_check(args):
    pair = read_pair_file(args.pair_file)
    rep = validate_povm(pair)
    body = {
        "pair_file": str(args.pair_file),
        "m1": pair.m1,
        "m2": pair.m2,
        "valid": rep.ok,
        "completeness_deviation": rep.deviation,
        "elements_psd": rep.elements_psd,
    }
    if not rep.ok:
        raise ValidationError(f"POVM incomplete (deviation {rep.deviation:.3g})")
    s = synthesize_module(pair)
    eff = effective_operators(s)
    body["module"] = {
        "zeta": s.zeta,
        "xi": s.xi,
        "theta": s.theta,
        "sigma": s.sigma,
        "v": s.v,
        "u1": s.u1,
        "u2": s.u2,
        "w": s.w,
    }
    body["round_trip_error"] = float(max(np.abs(eff.m1 - pair.m1).max(), np.abs(eff.m2 - pair.m2).max()))
    return body, []


def cmd_chsh(args):
    settings = CHSHSettings()
    cfg = noise_from_args(args)
    if args.target_s is not None:
        cfg = replace(cfg, werner_v=werner_for_chsh(args.target_s, settings))
    rho = noisy_source(cfg)
    est = chsh_sampled(rho, cfg.shots, cfg.seed, settings)
    body = {
        "config": noise_to_json(cfg),
        "angles_deg": {k: math.degrees(getattr(settings, k)) for k in ("a", "a2", "b", "b2")},
        "s_analytic": chsh(rho, settings),
        "s_sampled": est.s,
        "s_stderr": est.stderr,
        "correlations": list(est.correlations),
        "counts": [list(c) for c in est.counts],
    }
    return body, []


def cmd_tomo(args):
    cfg = noise_from_args(args)
    target = None
    if args.counts is not None:
        counts = TomoCounts.from_sequence(args.counts)
    elif args.alpha is not None and args.beta is not None:
        target = target_density(TargetPureSpec(args.alpha, args.beta, math.radians(args.phi_deg)))
        counts = measure_bases(target, cfg.shots, cfg.seed)
    else:
        raise ValidationError("give --counts or --alpha/--beta")
    rec = mle_reconstruct(counts, method=args.method)
    rho = rec.rho_hat
    body = {
        "config": noise_to_json(cfg),
        "counts": counts.as_list(),
        "rho_hat": density_to_json(rho),
        "stokes": list(stokes(rho)),
        "purity": purity(rho),
        "mle": {
            "method": rec.method,
            "converged": rec.converged,
            "iterations": rec.iterations,
            "log_likelihood": rec.log_likelihood,
        },
    }
    if target is not None:
        body["rho_target"] = density_to_json(target)
        body["fidelity"] = fidelity(rho, target)
    failed = [] if rec.converged else ["tomo"]
    return body, failed


COMMANDS = {
    "rsp-pure": lambda a: cmd_rsp(a, mixed=False),
    "rsp-mixed": lambda a: cmd_rsp(a, mixed=True),
    "paper-suite": cmd_paper_suite,
    "povm-check": cmd_povm_check,
    "chsh": cmd_chsh,
    "tomo": cmd_tomo,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    start = time.perf_counter()
    try:
        body, failed = COMMANDS[args.command](args)
        report = make_report(args.command, body, time.perf_counter() - start)
        report["nonconverged"] = failed
        _emit(report, args.out)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if failed and args.strict:
        print(f"error: optimizer did not converge for {', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
