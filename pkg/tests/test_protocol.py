import math

import numpy as np
import pytest
from hypothesis import given

from conftest import mixed_specs, pure_specs, random_mixed_spec, random_pure_spec
from rspsim.linalg import ALGEBRA_TOL, PHYSICS_TOL, is_unitary
from rspsim.povm import synthesize_module, validate_povm
from rspsim.protocol import (
    ALL_MESSAGES,
    ClassicalMessage,
    CorrectionOp,
    alice_stage_pure,
    bob_average,
    correction_for,
    decohere_timebins,
    interferometer_kraus,
    povm_for_pure,
    run_mixed_rsp,
    run_pure_rsp,
    run_rsp,
    vpr_settings_mixed,
    vpr_settings_pure,
)
from rspsim.states import (
    I2,
    KET_H,
    SZ,
    DensityMatrix,
    TargetMixedSpec,
    TargetPureSpec,
    bell_psi_plus,
    fidelity,
    projector,
    purity,
    target_mixed,
    target_pure,
)

H = 1 / math.sqrt(2)


def test_povm_for_pure_examples():
    p = povm_for_pure(TargetPureSpec(1, 0, 0))
    assert np.allclose(p.m1, np.diag([1, 0])) and np.allclose(p.m2, np.diag([0, 1]))
    p = povm_for_pure(TargetPureSpec(H, H, 0))
    assert np.allclose(p.m1, I2 * H) and np.allclose(p.m2, I2 * H)
    p = povm_for_pure(TargetPureSpec(0.6, 0.8, math.pi / 3))
    assert np.allclose(p.m1, np.diag([0.6, 0.8 * np.exp(1j * math.pi / 3)]))
    assert validate_povm(p, 1e-12)


@given(pure_specs())
def test_pure_povm_complete_and_synthesizable(spec):
    pair = povm_for_pure(spec)
    assert validate_povm(pair, 1e-12)
    synthesize_module(pair)


def test_messages_and_corrections():
    assert [m.label for m in ALL_MESSAGES] == ["0D", "0A", "1D", "1A"]
    table = {(1, 0): "I", (1, 1): "Z", (0, 0): "X", (0, 1): "Y"}
    for (m, k), op in table.items():
        assert correction_for(ClassicalMessage(m, k)).op == op
    with pytest.raises(ValueError):
        ClassicalMessage(2, 0)
    with pytest.raises(ValueError):
        CorrectionOp("H")


def test_alice_stage_examples():
    spec = TargetPureSpec(1, 0, 0)
    branches = alice_stage_pure(bell_psi_plus(), spec)
    assert [b.probability for b in branches] == pytest.approx([0.25] * 4, abs=ALGEBRA_TOL)
    one_d = next(b for b in branches if b.message.label == "1D")
    assert np.allclose(one_d.bob_pre.mat, projector(KET_H), atol=ALGEBRA_TOL)

    spec = TargetPureSpec(0.6, 0.8, 0.7)
    zero_a = next(b for b in alice_stage_pure(bell_psi_plus(), spec) if b.message.label == "0A")
    expected = np.array([-0.8 * np.exp(0.7j), 0.6])  # alpha|V> - beta e^{i phi}|H>
    assert fidelity(zero_a.bob_pre, DensityMatrix.from_ket(expected)) == pytest.approx(1, abs=ALGEBRA_TOL)


@given(pure_specs())
def test_pure_branches_equal_weight_and_exact(spec):
    target = target_pure(spec).density()
    branches = run_pure_rsp(spec)
    for b in branches:
        assert b.probability == pytest.approx(0.25, abs=ALGEBRA_TOL)
        assert fidelity(b.bob_post, target) >= 1 - PHYSICS_TOL


@given(pure_specs())
def test_no_signalling(spec):
    # Bob's state before he learns the message does not depend on the target
    avg = bob_average(run_pure_rsp(spec))
    assert np.abs(avg - I2 / 2).max() <= ALGEBRA_TOL


def test_pure_rsp_examples():
    for spec in (TargetPureSpec(H, H, math.pi / 2), TargetPureSpec(1, 0, 0)):
        target = target_pure(spec).density()
        for b in run_pure_rsp(spec):
            assert fidelity(b.bob_post, target) == pytest.approx(1, abs=PHYSICS_TOL)


def test_pure_rsp_sweep(rng):
    for _ in range(100):
        spec = random_pure_spec(rng)
        target = target_pure(spec).density()
        assert min(fidelity(b.bob_post, target) for b in run_pure_rsp(spec)) >= 1 - PHYSICS_TOL


def test_vpr_settings_examples():
    s = vpr_settings_mixed(TargetMixedSpec(0.6, 0.8, 0.2, 1, 0))
    assert np.allclose(s.vpr1[:, 0], [1, 0])
    assert np.allclose(s.vpr2[:, 1], [1, 0])
    s = vpr_settings_mixed(TargetMixedSpec(1, 0, 0, 0.8, 0.6))
    assert np.allclose(s.vpr3, SZ)


@given(mixed_specs())
def test_vpr3_unitary(spec):
    s = vpr_settings_mixed(spec)
    for m in (s.vpr1, s.vpr2, s.vpr3):
        assert is_unitary(m, ALGEBRA_TOL)


@given(mixed_specs())
def test_interferometer_is_trace_preserving(spec):
    ops = interferometer_kraus(vpr_settings_mixed(spec))
    total = sum(k.conj().T @ k for k in ops.values())
    assert np.abs(total - I2).max() <= ALGEBRA_TOL


@given(pure_specs())
def test_pure_interferometer_realizes_povm(spec):
    ops = interferometer_kraus(vpr_settings_pure(spec))
    total = sum(k.conj().T @ k for k in ops.values())
    assert np.abs(total - I2).max() <= ALGEBRA_TOL


def _ket(*amps):
    v = np.array(amps, dtype=complex)
    return v / np.linalg.norm(v)


def test_decohere_timebins_examples():
    early, late = np.array([1, 0]), np.array([0, 1])
    psi = _ket(0, 1, 1, 0)
    joint = np.kron(projector(psi), projector(early))
    assert np.allclose(decohere_timebins(joint).mat, projector(psi))

    p, q = math.sqrt(0.7), math.sqrt(0.3)
    psi1, psi3 = _ket(1, 0, 0, 1), _ket(0, 1, -1, 0)
    big = p * np.kron(psi1, early) + q * np.kron(psi3, late)
    out = decohere_timebins(projector(big))
    assert np.allclose(out.mat, 0.7 * projector(psi1) + 0.3 * projector(psi3), atol=ALGEBRA_TOL)

    big = H * np.kron(psi1, early) + H * np.kron(psi3, late)
    m = decohere_timebins(projector(big)).mat
    assert np.trace(m @ m).real == pytest.approx(0.5, abs=ALGEBRA_TOL)


def test_mixed_reduces_to_pure_at_p1():
    for ph in (0.0, 1.0, 4.0):
        pure = run_pure_rsp(TargetPureSpec(0.6, 0.8, ph))
        mixed = run_mixed_rsp(TargetMixedSpec(0.6, 0.8, ph, 1, 0))
        for a, b in zip(pure, mixed):
            assert a.message == b.message and a.correction == b.correction
            assert a.probability == pytest.approx(b.probability, abs=ALGEBRA_TOL)
            assert fidelity(a.bob_post, b.bob_post) == pytest.approx(1, abs=PHYSICS_TOL)


def test_maximally_mixed_target():
    for b in run_mixed_rsp(TargetMixedSpec(0.6, 0.8, 2.0, H, H)):
        assert np.allclose(b.bob_post.mat, I2 / 2, atol=PHYSICS_TOL)


@given(mixed_specs())
def test_mixed_rsp_exact(spec):
    target = target_mixed(spec)
    for b in run_mixed_rsp(spec):
        assert b.probability == pytest.approx(0.25, abs=ALGEBRA_TOL)
        assert fidelity(b.bob_post, target) >= 1 - PHYSICS_TOL
        assert purity(b.bob_post) == pytest.approx(spec.p**4 + spec.q**4, abs=PHYSICS_TOL)


def test_mixed_rsp_sweep(rng):
    for _ in range(100):
        spec = random_mixed_spec(rng)
        target = target_mixed(spec)
        for b in run_mixed_rsp(spec):
            assert fidelity(b.bob_post, target) >= 1 - PHYSICS_TOL
            assert abs(purity(b.bob_post) - (spec.p**4 + spec.q**4)) <= PHYSICS_TOL


def test_dispatch():
    assert len(run_rsp(TargetPureSpec(1, 0, 0))) == 4
    assert len(run_rsp(TargetMixedSpec(1, 0, 0, 1, 0))) == 4
