import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from doublepole import (
    ContractViolation,
    EffectiveHamiltonianModel,
    InvalidEnergyError,
    NoCrossingError,
    ParameterPoint,
    TwoLevelModel,
    build_effective_hamiltonian,
    build_hamiltonian,
    constant_form_factor,
    discriminant,
    eig_complex_symmetric,
    ratio_form_factor,
    two_level_effective_model,
)
from doublepole.model import discriminant_gradient

STD = TwoLevelModel(slopes=(1, -1), gamma1=1.0, gamma2=0.0)
F = oracles.FROZEN

finite = st.floats(-5, 5, allow_nan=False)
width = st.floats(0, 5, allow_nan=False)


def test_hamiltonian_vanishes_at_origin():
    m = TwoLevelModel(slopes=(1, -1))
    assert np.array_equal(build_hamiltonian(m, ParameterPoint(0, 0)), np.zeros((2, 2)))


def test_hamiltonian_substitution():
    h = build_hamiltonian(STD, ParameterPoint(1.0, 0.5))
    assert np.array_equal(h, np.array([[1 - 0.5j, 0.5], [0.5, -1]]))


def test_hermitian_limit():
    h = build_hamiltonian(TwoLevelModel(slopes=(0.3, -2)), ParameterPoint(0.7, 0.2))
    assert np.array_equal(h, h.conj().T)


@pytest.mark.parametrize(
    "model,p,key",
    [
        (TwoLevelModel(slopes=(0, 0)), ParameterPoint(0, 0.5), "F_hermitian_crossing"),
        (STD, ParameterPoint(0, 0.25), "F_ep"),
        (STD, ParameterPoint(0, 0.2), "F_sub"),
        (STD, ParameterPoint(0, 0.3), "F_over"),
    ],
)
def test_discriminant_against_oracle(model, p, key):
    assert abs(discriminant(model, p).f - F[key]) < 1e-15


def test_gradient_matches_finite_differences():
    p = ParameterPoint(0.3, 0.4)
    dl, dw = discriminant_gradient(STD, p)
    h = 1e-6
    fl = (discriminant(STD, ParameterPoint(p.lam + h, p.omega)).f - discriminant(STD, ParameterPoint(p.lam - h, p.omega)).f) / (2 * h)
    fw = (discriminant(STD, ParameterPoint(p.lam, p.omega + h)).f - discriminant(STD, ParameterPoint(p.lam, p.omega - h)).f) / (2 * h)
    assert abs(dl - fl) < 1e-8 and abs(dw - fw) < 1e-8


def test_invalid_models():
    with pytest.raises(ContractViolation):
        TwoLevelModel(gamma1=-1.0)
    with pytest.raises(ContractViolation):
        TwoLevelModel(omega=float("nan"))
    with pytest.raises(ContractViolation):
        ParameterPoint(float("inf"), 0)
    with pytest.raises(NoCrossingError):
        TwoLevelModel(slopes=(1, 1)).lambda_cr


def test_lambda_cr_with_intercepts():
    m = TwoLevelModel(intercepts=(0.5, 0.0), slopes=(0, 2))
    assert m.lambda_cr == 0.25
    assert m.detuning(m.lambda_cr) == 0


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite, width, width, finite, finite)
def test_hamiltonian_exactly_symmetric(a1, a2, b1, b2, g1, g2, lam, om):
    m = TwoLevelModel((a1, a2), (b1, b2), g1, g2)
    h = build_hamiltonian(m, ParameterPoint(lam, om))
    assert np.array_equal(h, h.T)


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite, width, width, finite, finite)
def test_discriminant_is_squared_splitting(a1, a2, b1, b2, g1, g2, lam, om):
    m = TwoLevelModel((a1, a2), (b1, b2), g1, g2)
    p = ParameterPoint(lam, om)
    w = np.linalg.eigvals(build_hamiltonian(m, p))
    f = discriminant(m, p).f
    scale = max(1.0, abs(f), float(np.abs(build_hamiltonian(m, p)).max()) ** 2)
    assert abs((w[0] - w[1]) ** 2 - f) < 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(finite, finite, width, finite, finite)
def test_equal_widths_give_real_discriminant(b1, b2, g, lam, om):
    m = TwoLevelModel(slopes=(b1, b2), gamma1=g, gamma2=g)
    assert discriminant(m, ParameterPoint(lam, om)).f_imag == 0


def test_effective_hamiltonian_without_coupling_is_h0():
    h0 = np.array([[1.0, 0.3], [0.3, -2.0]])
    m = EffectiveHamiltonianModel(h0, np.zeros((2, 1)))
    assert np.array_equal(build_effective_hamiltonian(m), h0)


def test_effective_hamiltonian_single_channel_matches_two_level():
    lam = 0.7
    m = EffectiveHamiltonianModel(np.diag([lam, -lam]), np.array([[1.0], [0.0]]))
    ref = build_hamiltonian(TwoLevelModel(gamma1=1.0), ParameterPoint(lam, 0.0))
    assert np.allclose(build_effective_hamiltonian(m), ref, atol=0, rtol=1e-15)


def test_effective_hamiltonian_two_channels_matches_two_level():
    m2 = TwoLevelModel(slopes=(1, -1), gamma1=0.8, gamma2=0.2)
    p = ParameterPoint(0.4, 0.3)
    eff = two_level_effective_model(m2, p)
    # rows of w are orthogonal with norms sqrt(gamma_k)
    assert abs(eff.w[0] @ eff.w[1]) == 0
    assert np.allclose(np.sum(eff.w ** 2, axis=1), [0.8, 0.2])
    assert np.allclose(build_effective_hamiltonian(eff), build_hamiltonian(m2, p), rtol=0, atol=1e-15)


def test_trace_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n, c = rng.integers(1, 7), rng.integers(1, 4)
        a = rng.normal(size=(n, n))
        w = rng.normal(size=(n, c))
        m = EffectiveHamiltonianModel(a + a.T, w)
        h = build_effective_hamiltonian(m)
        assert abs(np.trace(h) - (np.trace(m.h0) - 0.5j * np.sum(w ** 2))) < 1e-12 * max(1, np.sum(w ** 2))


def test_effective_model_validation():
    with pytest.raises(ContractViolation):
        EffectiveHamiltonianModel([[1, 2], [0, 1]], [[1], [1]])
    with pytest.raises(ContractViolation):
        EffectiveHamiltonianModel([[1, 0], [0, 1]], [[1], [1], [1]])
    m = EffectiveHamiltonianModel([[1.0]], [1.0])
    assert m.w.shape == (1, 1)


def test_form_factors():
    ff = ratio_form_factor(1.0)
    assert ff(1.0) == 0.5
    with pytest.raises(InvalidEnergyError):
        ff(0.0)
    with pytest.raises(InvalidEnergyError):
        ff(-1.0)
    assert constant_form_factor(2.0)(-100.0) == 2.0
    m = EffectiveHamiltonianModel([[2.0]], [[1.0]], [ff])
    assert not m.energy_independent
    h = build_effective_hamiltonian(m, 2.0)
    assert cmath.isclose(h[0, 0], 2 - 0.5j * (2 / 3) ** 2)
    with pytest.raises(InvalidEnergyError):
        build_effective_hamiltonian(m, -0.5)


def test_scaled_model_keeps_h0():
    m = EffectiveHamiltonianModel(np.diag([1.0, -1.0]), [[1.0], [1.0]])
    s = m.scaled(3.0)
    assert np.array_equal(s.h0, m.h0) and np.array_equal(s.w, 3.0 * m.w)


def test_eigensystem_accepts_built_matrices():
    es = eig_complex_symmetric(build_hamiltonian(STD, ParameterPoint(0.2, 0.3)))
    assert not es.ep_flag
