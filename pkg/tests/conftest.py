import math

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from rspsim.povm import PovmPair
from rspsim.states import TargetMixedSpec, TargetPureSpec, from_stokes

settings.register_profile("default", derandomize=True, deadline=None, max_examples=100)
settings.load_profile("default")

unit = st.floats(-1.0, 1.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, allow_nan=False, exclude_max=True)


@st.composite
def complex_matrices(draw, dim=2):
    vals = draw(st.lists(unit, min_size=2 * dim * dim, max_size=2 * dim * dim))
    a = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    return a.reshape(dim, dim)


@st.composite
def hermitian_matrices(draw, dim=2):
    a = draw(complex_matrices(dim))
    return 0.5 * (a + a.conj().T)


@st.composite
def unitaries(draw):
    a, b, c, d = (draw(angle) for _ in range(4))
    # general U(2): e^{ia} [[e^{ib} cos c, e^{id} sin c], [-e^{-id} sin c, e^{-ib} cos c]]
    return np.exp(1j * a) * np.array(
        [[np.exp(1j * b) * math.cos(c), np.exp(1j * d) * math.sin(c)],
         [-np.exp(-1j * d) * math.sin(c), np.exp(-1j * b) * math.cos(c)]]
    )


@st.composite
def density_matrices(draw):
    s = np.array([draw(unit) for _ in range(3)])
    r = draw(st.floats(0.0, 1.0))
    n = np.linalg.norm(s)
    s = s / n * r if n > 1e-9 else np.zeros(3)
    return from_stokes(s)


@st.composite
def pure_specs(draw):
    polar = draw(st.floats(0.0, math.pi))
    return TargetPureSpec.from_polar(polar, draw(angle))


@st.composite
def mixed_specs(draw):
    pure = draw(pure_specs())
    w = draw(st.floats(0.0, math.pi / 2))
    return TargetMixedSpec(pure.alpha, pure.beta, pure.phi, math.cos(w), math.sin(w))


@st.composite
def povm_pairs(draw):
    u1, u2, v = draw(unitaries()), draw(unitaries()), draw(unitaries())
    a, b = draw(st.floats(0, math.pi / 2)), draw(st.floats(0, math.pi / 2))
    m1 = u1 @ np.diag([math.cos(a), math.cos(b)]) @ v
    m2 = u2 @ np.diag([math.sin(a), math.sin(b)]) @ v
    return PovmPair(m1, m2)


def random_unitary(rng):
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_povm_pair(rng):
    s = rng.uniform(0, 1, size=2)
    c = np.sqrt(1 - s**2)
    v = random_unitary(rng)
    return PovmPair(random_unitary(rng) @ np.diag(s) @ v, random_unitary(rng) @ np.diag(c) @ v)


def random_pure_spec(rng):
    polar = math.acos(rng.uniform(-1, 1))
    return TargetPureSpec.from_polar(polar, rng.uniform(0, 2 * math.pi))


def random_mixed_spec(rng):
    pure = random_pure_spec(rng)
    w = rng.uniform(0, math.pi / 2)
    return TargetMixedSpec(pure.alpha, pure.beta, pure.phi, math.cos(w), math.sin(w))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
