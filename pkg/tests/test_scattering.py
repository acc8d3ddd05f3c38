import cmath

import numpy as np
import pytest

import oracles
from doublepole import (
    ContractViolation,
    DoublePoleError,
    EffectiveHamiltonianModel,
    ParameterPoint,
    SingularityError,
    TwoLevelModel,
    build_effective_hamiltonian,
    double_pole_smoothness,
    eig_complex_symmetric,
    eigenbasis_expansion,
    find_poles,
    isolated_width_deviation,
    ratio_form_factor,
    s_matrix,
    scan,
    trapping_sweep,
    two_level_effective_model,
    two_level_family,
)
from doublepole.scattering import unitarity_defect

STD = TwoLevelModel(slopes=(1, -1), gamma1=1.0)
F = oracles.FROZEN
TRAP = EffectiveHamiltonianModel(np.diag([1.0, -1.0]), [[1.0], [1.0]])


def random_model(rng, n, c):
    a = rng.normal(size=(n, n))
    return EffectiveHamiltonianModel(a + a.T, rng.normal(size=(n, c)))


def test_no_coupling_gives_identity():
    m = EffectiveHamiltonianModel(np.diag([1.0, 2.0]), np.zeros((2, 3)))
    for e in (-1.0, 0.5, 3.0):
        assert np.array_equal(s_matrix(m, e), np.eye(3))


def test_single_resonance():
    e0, g = 0.7, 0.3
    m = EffectiveHamiltonianModel([[e0]], [[np.sqrt(g)]])
    for e in np.linspace(-2, 3, 101):
        s = s_matrix(m, float(e))[0, 0]
        assert cmath.isclose(s, 1 - 1j * g / (e - e0 + 0.5j * g), rel_tol=1e-13)
        assert abs(abs(s) - 1) < 1e-14
    assert abs(s_matrix(m, e0)[0, 0] + 1) < 1e-15


def test_overcritical_unitarity_on_grid():
    m = two_level_effective_model(STD, ParameterPoint(0.1, 0.3))
    sc = scan(m, np.linspace(-3, 3, 1001))
    assert sc.unitarity_defect.max() < 1e-10
    assert sc.symmetry_defect.max() < 1e-10


def test_random_models_unitary_and_symmetric():
    rng = np.random.default_rng(8)
    for _ in range(30):
        m = random_model(rng, rng.integers(1, 7), rng.integers(1, 4))
        sc = scan(m, np.linspace(-4, 4, 61))
        assert sc.unitarity_defect.max() < 1e-8
        assert sc.symmetry_defect.max() < 1e-10


def test_complex_energy_only_for_constant_couplings():
    m = EffectiveHamiltonianModel([[2.0]], [[1.0]], [ratio_form_factor()])
    with pytest.raises(ContractViolation):
        s_matrix(m, 1 + 0.1j)


def test_singular_resolvent():
    m = EffectiveHamiltonianModel([[1.0]], [[0.0]])
    with pytest.raises(SingularityError):
        s_matrix(m, 1.0)


def test_expansion_reconstructs_s():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m = random_model(rng, 4, 2)
        ex = eigenbasis_expansion(m, 0.3)
        assert np.abs(ex.reconstruct() - s_matrix(m, 0.3)).max() < 1e-9


def test_expansion_refuses_double_pole():
    m = two_level_effective_model(STD, ParameterPoint(0, 0.25))
    with pytest.raises(DoublePoleError):
        eigenbasis_expansion(m, 0.0)


def test_energy_independent_poles_are_eigenvalues():
    rng = np.random.default_rng(4)
    for _ in range(20):
        m = random_model(rng, 5, 2)
        ps = find_poles(m)
        es = eig_complex_symmetric(build_effective_hamiltonian(m))
        assert np.abs(ps.values - es.eigenvalues).max() < 1e-12
        assert all(ps.converged)


def test_trace_sum_rule():
    rng = np.random.default_rng(6)
    m = random_model(rng, 6, 3)
    ps = find_poles(m)
    assert abs(ps.values.sum() - (np.trace(m.h0) - 0.5j * np.sum(m.w ** 2))) < 1e-12


def test_residues_rank_one():
    rng = np.random.default_rng(7)
    m = random_model(rng, 4, 3)
    ps = find_poles(m)
    for k in range(4):
        r = ps.residues[k]
        sv = np.linalg.svd(r, compute_uv=False)
        assert sv[1] < 1e-10 * sv[0]
        g = ps.couplings[k]
        assert np.linalg.norm(r - (-1j) * np.outer(g, g)) < 1e-6 * np.linalg.norm(r)


def test_residue_matches_contour_limit():
    # (E - E_k) S(E) -> residue as E -> E_k (complex energy, constant couplings)
    rng = np.random.default_rng(9)
    m = random_model(rng, 3, 2)
    ps = find_poles(m)
    for k in range(3):
        z = ps.values[k]
        eps = 1e-7
        approx = eps * s_matrix(m, z + eps)
        assert np.abs(approx - ps.residues[k]).max() < 1e-5 * max(1, np.abs(ps.residues[k]).max())


def test_single_level_residue():
    m = EffectiveHamiltonianModel([[0.5]], [[np.sqrt(0.4)]])
    ps = find_poles(m)
    assert cmath.isclose(ps.residues[0][0, 0], -0.4j, rel_tol=1e-12)


def test_single_level_energy_dependent_pole_against_scan():
    m = EffectiveHamiltonianModel([[2.0]], [[1.0]], [ratio_form_factor(1.0)])
    ps = find_poles(m)
    assert ps.converged[0]
    assert abs(ps.values[0] - F["pole_ratio_n1"]) < 1e-6


def test_two_level_energy_dependent_poles_against_brentq():
    m = EffectiveHamiltonianModel([[2, 0.2], [0.2, 1]], [[0.6, 0.3], [0.4, 0.5]], [ratio_form_factor(1.0)] * 2)
    ps = find_poles(m)
    assert all(ps.converged)
    got = np.sort_complex(ps.values)
    ref = np.array(F["poles_ratio_n2"])
    assert np.abs(got - ref).max() < 1e-10


def test_isolated_width_relation():
    dev = [isolated_width_deviation(TRAP.scaled(a)).max() for a in (0.01, 0.1, 1, 5)]
    assert dev[0] < 1e-3
    assert np.all(np.diff(dev) > 0)
    assert dev[-1] > 0.1
    # quadratic rate as alpha -> 0
    assert 50 < dev[1] / dev[0] < 200


def test_single_state_width_relation_is_exact():
    m = EffectiveHamiltonianModel([[0.3]], [[0.7, 0.2]])
    assert isolated_width_deviation(m).max() < 1e-14


def test_trapping():
    tr = trapping_sweep(TRAP, [0.0, 1.0, 10.0])
    assert np.array_equal(tr.widths[0], [0, 0])
    assert tr.widths[2, -1] < tr.widths[1, -1]
    assert np.allclose(tr.width_sums, np.array([0, 1, 100]) * 2, rtol=1e-14, atol=0)
    with pytest.raises(ContractViolation):
        trapping_sweep(TRAP, [1.0, 0.5])


def test_smoothness_at_double_pole():
    ep = ParameterPoint(0, 0.25)
    fam = two_level_family(STD, ep)
    curve = double_pole_smoothness(fam, [0.1, 0.05, 0.025, 0.0], np.linspace(-3, 3, 301))
    assert curve.deviation[-1] == 0
    assert np.all(np.diff(curve.deviation[:3]) < 0)
    assert curve.unitarity.max() < 1e-8


def test_unitarity_defect_helper():
    assert unitarity_defect(np.eye(3)) == 0
    assert unitarity_defect(2 * np.eye(2)) == pytest.approx(3)
