import csv
import json
import math

import numpy as np
import pytest

from rspsim import cli, tomography
from rspsim.linalg import ValidationError
from rspsim.report import TIMING_KEY, densities_in, dumps, loads, make_report, read_report
from rspsim.suite import default_manifest, load_manifest, write_manifest

H = repr(1 / math.sqrt(2))


def run(tmp_path, *args, name="r.json"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def body(path):
    rep = read_report(path)
    rep.pop(TIMING_KEY)
    return rep


def test_rsp_pure_ideal(tmp_path):
    code, out = run(tmp_path, "rsp-pure", "--alpha", H, "--beta", H)
    assert code == 0
    rep = read_report(out)
    branches = rep["state"]["branches"]
    assert len(branches) == 4
    for b in branches:
        assert b["exact_fidelity"] == pytest.approx(1, abs=1e-10)
        assert b["tomography_fidelity"] > 0.99
        assert b["probability"] == pytest.approx(0.25)
    assert rep["config"]["seed"] == 0xC0FFEE
    assert rep["version"] == "0.1.0"


def test_malformed_spec_exit_2(tmp_path, capsys):
    code, out = run(tmp_path, "rsp-pure", "--alpha", "0.8", "--beta", "0.5")
    assert code == 2
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_bad_flags_exit_2(tmp_path):
    assert cli.main(["rsp-pure", "--alpha", "x"]) == 2
    assert run(tmp_path, "chsh", "--werner-v", "1.5")[0] == 2
    assert run(tmp_path, "chsh", "--shots", "0")[0] == 2


def test_rsp_mixed(tmp_path):
    _, a = run(tmp_path, "rsp-mixed", "--alpha", "0.6", "--beta", "0.8", "--phi-deg", "30", "--p", "1", "--q", "0", name="a.json")
    _, b = run(tmp_path, "rsp-pure", "--alpha", "0.6", "--beta", "0.8", "--phi-deg", "30", name="b.json")
    ra, rb = read_report(a), read_report(b)
    for x, y in zip(ra["state"]["branches"], rb["state"]["branches"]):
        assert x["exact_fidelity"] == pytest.approx(y["exact_fidelity"], abs=1e-10)
        assert x["message"] == y["message"]

    _, c = run(tmp_path, "rsp-mixed", "--alpha", "0.6", "--beta", "0.8", "--p", H, "--q", H, name="c.json")
    assert read_report(c)["state"]["target_stokes"] == pytest.approx([0, 0, 0], abs=1e-12)

    rng = np.random.default_rng(8)
    t, w = rng.uniform(0, math.pi / 2, size=2)
    args = ["--alpha", repr(math.cos(t)), "--beta", repr(math.sin(t)), "--phi-deg", "200"]
    _, d = run(tmp_path, "rsp-mixed", *args, "--p", repr(math.cos(w)), "--q", repr(math.sin(w)), name="d.json")
    for br in read_report(d)["state"]["branches"]:
        assert br["exact_fidelity"] == pytest.approx(1, abs=1e-10)


def test_report_deterministic(tmp_path):
    args = ("rsp-pure", "--alpha", "0.6", "--beta", "0.8", "--visibility", "0.95", "--shots", "500")
    _, a = run(tmp_path, *args, name="a.json")
    _, b = run(tmp_path, *args, name="b.json")
    assert dumps(body(a)) == dumps(body(b))
    _, c = run(tmp_path, *args, "--seed", "1", name="c.json")
    assert dumps(body(a)) != dumps(body(c))


def test_suite_command(tmp_path):
    code, out = run(tmp_path, "paper-suite", "--shots", "2000", "--workers", "3")
    assert code == 0
    rep = read_report(out)
    assert rep["n_states"] == 18
    assert rep["mean_exact_fidelity"] == pytest.approx(1, abs=1e-10)
    assert rep["mean_fidelity"] > 0.99
    with open(tmp_path / "r.poincare.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 18
    assert set(rows[0]) == {"label", "s1", "s2", "s3", "purity", "fidelity"}
    with open(tmp_path / "r.fidelity.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 72
    assert len(densities_in(rep)) == 18 * (1 + 4 * 2)


def test_suite_visibility_097(tmp_path):
    _, out = run(tmp_path, "paper-suite", "--visibility", "0.97")
    rep = read_report(out)
    assert "mean_fidelity" in rep and rep["mean_fidelity"] >= 0.98


def test_suite_calibrated_and_manifest(tmp_path):
    path = tmp_path / "m.csv"
    write_manifest(default_manifest()[10:14], path)
    code, out = run(tmp_path, "paper-suite", "--manifest", str(path), "--calibrate", "--shots", "1000")
    assert code == 0
    rep = read_report(out)
    assert rep["n_states"] == 4
    assert rep["mean_exact_fidelity"] == pytest.approx(cli.REPORTED_MEAN_FIDELITY, abs=1e-8)
    assert rep["calibration"]["knob"] == "interferometer_visibility"


def test_manifest_round_trip(tmp_path):
    entries = default_manifest()
    write_manifest(entries, tmp_path / "m.csv")
    back = load_manifest(tmp_path / "m.csv")
    assert [e.label for e in back] == [e.label for e in entries]
    for a, b in zip(entries, back):
        assert a.kind == b.kind
        assert abs(a.spec.phi - b.spec.phi) < 1e-12 and abs(a.spec.alpha - b.spec.alpha) < 1e-15
    (tmp_path / "bad.csv").write_text("label,kind,alpha,beta,phi_deg,p,q\nx,weird,1,0,0,,\n")
    with pytest.raises(ValidationError):
        load_manifest(tmp_path / "bad.csv")
    assert cli.main(["paper-suite", "--manifest", str(tmp_path / "bad.csv")]) == 2
    assert cli.main(["paper-suite", "--manifest", str(tmp_path / "missing.csv")]) == 2


def _pair_file(path, m1, m2):
    nums = []
    for z in np.concatenate([np.ravel(m1), np.ravel(m2)]):
        nums += [repr(float(np.real(z))), repr(float(np.imag(z)))]
    path.write_text(" ".join(nums))
    return path


def test_povm_check(tmp_path):
    f = _pair_file(tmp_path / "p.txt", np.diag([0.6, 0.8]), np.diag([0.8, 0.6]))
    code, out = run(tmp_path, "povm-check", str(f))
    assert code == 0
    rep = read_report(out)
    assert rep["valid"]
    assert rep["module"]["zeta"] == pytest.approx(math.acos(0.6))
    assert rep["round_trip_error"] <= 1e-12

    f = _pair_file(tmp_path / "bad.txt", np.eye(2), np.eye(2))
    code, out = run(tmp_path, "povm-check", str(f), name="bad.json")
    assert code == 2 and not out.exists()
    (tmp_path / "short.txt").write_text("1 0 0")
    assert cli.main(["povm-check", str(tmp_path / "short.txt")]) == 2


def test_chsh(tmp_path):
    code, out = run(tmp_path, "chsh", "--target-s", "2.664", "--shots", "20000")
    assert code == 0
    rep = read_report(out)
    assert rep["s_analytic"] == pytest.approx(2.664, abs=1e-10)
    assert abs(rep["s_sampled"] - 2.664) < 5 * rep["s_stderr"]
    assert rep["angles_deg"] == pytest.approx({"a": 0, "a2": 45, "b": 67.5, "b2": 22.5})


def test_tomo(tmp_path):
    code, out = run(tmp_path, "tomo", "--counts", "95", "5", "95", "5", "50", "50")
    assert code == 0
    rep = read_report(out)
    assert np.linalg.norm(rep["stokes"]) <= 1 + 1e-10
    code, out = run(tmp_path, "tomo", "--alpha", "0.6", "--beta", "0.8", "--phi-deg", "45", name="t.json")
    assert read_report(out)["fidelity"] > 0.99
    assert run(tmp_path, "tomo", name="x.json")[0] == 2


def test_strict_nonconvergence(tmp_path, monkeypatch):
    real = tomography.mle_reconstruct
    monkeypatch.setattr(cli, "mle_reconstruct", lambda c, method="gradient": real(c, method, max_iter=1))
    # outside the Bloch ball, so the linear-inversion start is not the optimum
    args = ("tomo", "--counts", "95", "5", "95", "5", "50", "50")
    code, out = run(tmp_path, *args)
    assert code == 0 and read_report(out)["nonconverged"] == ["tomo"]
    code, _ = run(tmp_path, *args, "--strict", name="s.json")
    assert code == 3


def test_stdout_report(capsys):
    assert cli.main(["tomo", "--counts", "10", "0", "5", "5", "5", "5"]) == 0
    rep = loads(capsys.readouterr().out)
    assert rep["command"] == "tomo"


def test_report_read_back_validates():
    rep = make_report("x", {"rho": np.eye(2) / 2 + 0j}, 0.1)
    rep["rho"]["kind"] = "density"
    text = dumps(rep)
    assert loads(text)["timing"]["wall_clock_s"] == 0.1
    bad = json.loads(text)
    bad["rho"]["re"] = [[1.5, 0], [0, -0.5]]
    with pytest.raises(ValidationError):
        loads(json.dumps(bad))
    with pytest.raises(ValidationError):
        make_report("x", {"v": float("nan")})


def test_report_floats_round_trip():
    x = 0.1 + 0.2
    rep = loads(dumps(make_report("x", {"x": x, "m": np.array([[x + 1j * x]])})))
    assert rep["x"] == x and rep["m"]["im"][0][0] == x
