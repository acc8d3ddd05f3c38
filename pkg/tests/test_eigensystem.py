import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

import oracles
from doublepole import (
    ContractViolation,
    ParameterPoint,
    TwoLevelModel,
    build_hamiltonian,
    c_product,
    chiral_superposition,
    eig_complex_symmetric,
    eigenvalues_two_level,
    overlap_metrics,
)
from doublepole.eigensystem import ComplexEigenvalue, c_normalize, sort_eigenvalues

STD = TwoLevelModel(slopes=(1, -1), gamma1=1.0, gamma2=0.0)


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def test_complex_eigenvalue_roundtrip():
    z = 1.5 - 0.25j
    ev = ComplexEigenvalue.from_value(z)
    assert ev.energy == 1.5 and ev.width == 0.5 and complex(ev) == z


def test_closed_form_diagonal():
    vals = eigenvalues_two_level(TwoLevelModel(intercepts=(1, -1), slopes=(0, 0)), ParameterPoint(0, 0))
    assert [v.value for v in vals] == [-1, 1]


def test_closed_form_degenerate_levels():
    vals = eigenvalues_two_level(TwoLevelModel(slopes=(0, 0)), ParameterPoint(0, 0.5))
    assert [v.value for v in vals] == [-0.5, 0.5]


def test_closed_form_at_ep():
    vals = eigenvalues_two_level(STD, ParameterPoint(0, 0.25))
    for v in vals:
        assert abs(v.value - (-0.25j)) < 1e-15


def test_diagonal_hermitian():
    es = eig_complex_symmetric(np.diag([1.0, 2.0]))
    assert np.allclose(es.eigenvalues, [1, 2])
    assert np.allclose(es.vectors, np.eye(2))
    assert np.allclose(es.a_metrics, 1)
    assert not es.ep_flag


def test_overcritical_against_oracle():
    m = TwoLevelModel(slopes=(0, 0), gamma1=1.0, omega=0.5)
    p = ParameterPoint(0, 0.5)
    es = eig_complex_symmetric(build_hamiltonian(m, p))
    ref = np.array(oracles.FROZEN["eig_overcritical"])
    assert np.abs(es.eigenvalues - ref).max() < 1e-12
    closed = np.array([v.value for v in eigenvalues_two_level(m, p)])
    assert np.abs(es.eigenvalues - closed).max() < 1e-12
    a = es.a_metrics
    assert a[0] > 1 and abs(a[0] - a[1]) < 1e-12
    assert abs(es.b_metrics[0, 1] - es.b_metrics[1, 0]) < 1e-12


def test_ep_is_flagged():
    es = eig_complex_symmetric(build_hamiltonian(STD, ParameterPoint(0, 0.25)))
    assert es.ep_flag
    assert "exceptional" in es.diagnostic
    assert np.all(np.isinf(es.a_metrics[list(es.flagged)]))
    # flagged vectors are returned with unit ordinary norm
    for k in es.flagged:
        assert abs(np.linalg.norm(es.vectors[:, k]) - 1) < 1e-12


def test_metrics_grow_toward_ep():
    omegas = 0.25 + np.array([1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    a, b = [], []
    for w in omegas:
        es = eig_complex_symmetric(build_hamiltonian(STD, ParameterPoint(0, w)))
        assert not es.ep_flag
        a.append(es.a_metrics[0])
        b.append(es.b_metrics[0, 1])
    assert np.all(np.diff(a) > 0) and np.all(np.diff(b) > 0)
    assert a[-1] > 100


def test_overlap_metrics_real_orthonormal():
    q = ortho_group.rvs(4, random_state=1)
    a, b = overlap_metrics(q)
    assert np.allclose(a, 1) and np.allclose(b, 0)


def test_overlap_metrics_requires_c_normalized():
    with pytest.raises(ContractViolation):
        overlap_metrics(np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_chiral_superposition_basics():
    v = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    assert np.array_equal(chiral_superposition(v, 1, 0), v[:, 0])
    assert np.array_equal(chiral_superposition(v, 0, 1, +1), 1j * v[:, 1])
    assert np.array_equal(chiral_superposition([v[:, 0], v[:, 1]], 0, 1, -1), -1j * v[:, 1])
    with pytest.raises(ContractViolation):
        chiral_superposition(v, 1, 1, 2)
    with pytest.raises(ContractViolation):
        chiral_superposition(np.ones((3, 3)), 1, 1)


def test_rejects_non_symmetric_and_oversized():
    with pytest.raises(ContractViolation):
        eig_complex_symmetric(np.array([[1, 2], [3, 4]]))
    with pytest.raises(ContractViolation):
        eig_complex_symmetric(np.eye(65))


def test_sign_convention():
    rng = np.random.default_rng(0)
    for _ in range(100):
        es = eig_complex_symmetric(random_symmetric(rng, 5))
        for k in range(5):
            v = es.vectors[:, k]
            j = int(np.argmax(np.abs(v)))
            ang = np.angle(v[j])
            assert -np.pi / 2 < ang <= np.pi / 2 + 1e-12


def test_ordering():
    vals = np.array([1 + 1j, -1 + 0j, 1 - 1j, 0.5 + 0j])
    assert list(sort_eigenvalues(vals)) == [1, 3, 2, 0]


def test_degenerate_non_defective_space_is_c_orthogonal():
    h = np.diag([1.0, 1.0, 2.0]).astype(complex)
    es = eig_complex_symmetric(h)
    assert not es.ep_flag
    assert np.abs(es.c_gram() - np.eye(3)).max() < 1e-12


def test_c_normalize():
    v = c_normalize(np.array([1.0, 1j * 0.5]))
    assert abs(c_product(v, v) - 1) < 1e-15


def test_near_ep_biorthogonality_holds():
    for d in (1e-4, 1e-6, 1e-8):
        es = eig_complex_symmetric(build_hamiltonian(STD, ParameterPoint(0, 0.25 + d)))
        assert not es.ep_flag
        assert np.abs(es.c_gram() - np.eye(2)).max() < 1e-8


def test_two_level_overlaps_are_imaginary():
    rng = np.random.default_rng(11)
    for _ in range(200):
        h = random_symmetric(rng, 2)
        es = eig_complex_symmetric(h)
        assert es.antisymmetry_defect() < 1e-10 * es.a_metrics.max()


def test_three_level_overlaps_are_not_generally_imaginary():
    # Re(O^H O) = I + 2 Im(O)^T Im(O) for complex orthogonal O, whose
    # off-diagonal part only vanishes identically in two dimensions
    rng = np.random.default_rng(5)
    worst = max(eig_complex_symmetric(random_symmetric(rng, 3)).antisymmetry_defect() for _ in range(50))
    assert worst > 1e-2


two_level = st.tuples(
    st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
    st.floats(0, 3), st.floats(0, 3), st.floats(-3, 3), st.floats(-3, 3),
)


@settings(max_examples=1000, deadline=None)
@given(two_level)
def test_closed_form_matches_solver(args):
    a1, a2, b1, b2, g1, g2, lam, om = args
    m = TwoLevelModel((a1, a2), (b1, b2), g1, g2)
    p = ParameterPoint(lam, om)
    h = build_hamiltonian(m, p)
    es = eig_complex_symmetric(h)
    closed = np.array([v.value for v in eigenvalues_two_level(m, p)])
    scale = max(1.0, float(np.abs(h).max()))
    gap = abs(closed[0] - closed[1])
    if gap < 1e-6 * scale:
        return  # near-degenerate: labels are ambiguous, conditioning is sqrt(eps)
    # compare as multisets to stay label-independent
    d = min(np.abs(es.eigenvalues - closed).max(), np.abs(es.eigenvalues[::-1] - closed).max())
    assert d < 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 31))
def test_spectrum_invariant_under_orthogonal_similarity(n, seed):
    rng = np.random.default_rng(seed)
    h = random_symmetric(rng, n)
    q = ortho_group.rvs(n, random_state=seed) if n > 1 else np.eye(1)
    h2 = q @ h @ q.T
    h2 = 0.5 * (h2 + h2.T)
    w1 = np.sort_complex(eig_complex_symmetric(h).eigenvalues)
    w2 = np.sort_complex(eig_complex_symmetric(h2).eigenvalues)
    # match as multisets: sort_complex is exact only up to near-ties
    cost = np.abs(w1[:, None] - w2[None, :])
    from scipy.optimize import linear_sum_assignment

    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() < 1e-10 * max(1.0, np.abs(h).max())
