"""JSON reports and CSV side tables.

Complex matrices are stored as ``{"re": [[...]], "im": [[...]]}``; density
matrices carry ``"kind": "density"`` and are re-validated when read back.
Wall-clock time lives under the top-level ``timing`` key so that everything
else is byte-identical across runs with the same configuration and seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .lab import NoiseConfig
from .linalg import ValidationError
from .states import DensityMatrix

TIMING_KEY = "timing"
DENSITY = "density"


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(node: dict) -> np.ndarray:
    try:
        re = np.asarray(node["re"], dtype=float)
        im = np.asarray(node["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix node: {exc}") from exc
    if re.shape != im.shape:
        raise ValidationError("real and imaginary parts differ in shape")
    return re + 1j * im


def density_to_json(rho: DensityMatrix | None) -> dict | None:
    if rho is None:
        return None
    return {"kind": DENSITY, **matrix_to_json(rho.mat)}


def noise_to_json(cfg: NoiseConfig) -> dict:
    return asdict(cfg)


def _plain(x: Any) -> Any:
    """Convert numpy scalars, arrays and density matrices into JSON-ready values."""
    if isinstance(x, DensityMatrix):
        return density_to_json(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return matrix_to_json(x) if np.iscomplexobj(x) else x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        raise ValidationError(f"non-finite value {x} in report")
    return x


def make_report(command: str, body: dict, wall_clock_s: float | None = None) -> dict:
    rep = {"command": command, "version": __version__, **_plain(body)}
    rep[TIMING_KEY] = {"wall_clock_s": wall_clock_s}
    return rep


def _validate_tree(node: Any) -> None:
    if isinstance(node, dict):
        if node.get("kind") == DENSITY:
            DensityMatrix(matrix_from_json(node))
            return
        for v in node.values():
            _validate_tree(v)
    elif isinstance(node, list):
        for v in node:
            _validate_tree(v)


def dumps(report: dict) -> str:
    _validate_tree(report)
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    text = dumps(report)
    Path(path).write_text(text)


def loads(text: str) -> dict:
    """Parse a report and check that every stored density matrix is physical."""
    report = json.loads(text)
    _validate_tree(report)
    return report


def read_report(path: str | Path) -> dict:
    return loads(Path(path).read_text())


def densities_in(report: dict) -> list[DensityMatrix]:
    found: list[DensityMatrix] = []

    def walk(node):
        if isinstance(node, dict):
            if node.get("kind") == DENSITY:
                found.append(DensityMatrix(matrix_from_json(node)))
                return
            for v in node.values():
                walk(v)
        elif isinstance(node, list):
            for v in node:
                walk(v)

    walk(report)
    return found


def write_csv(rows: list[dict], path: str | Path, fields: tuple[str, ...]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items() if k in fields})
