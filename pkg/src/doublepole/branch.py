"""Coupling regimes, double-pole location and exchange diagnostics.

With a real coupling, the discriminant at the level crossing is real,
``F(lam_cr) = 4 omega**2 - (gamma1 - gamma2)**2 / 4``, and its sign separates
three regimes: overcritical (energies repel, widths cross), the double pole
itself, and subcritical (energies cross, widths repel).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .eigensystem import ComplexEigenvalue, chiral_superposition, eig_complex_symmetric
from .errors import ContractViolation
from .model import ParameterPoint, TwoLevelModel, build_hamiltonian, discriminant, discriminant_gradient

__all__ = [
    "Regime",
    "CouplingRegime",
    "BranchPoint",
    "ExchangeReport",
    "ChiralReport",
    "classify",
    "known_branch_points",
    "find_branch_point",
    "find_degeneracy",
    "exchange_diagnostic",
    "chiral_diagnostic",
]

BRANCH_TOL = 1e-20
MAX_NEWTON = 100
NEAR_DP_BAND = 1e-6


class Regime(str, enum.Enum):
    OVERCRITICAL = "overcritical"
    DOUBLE_POLE = "double-pole"
    SUBCRITICAL = "subcritical"


@dataclass(frozen=True)
class CouplingRegime:
    regime: Regime
    f_real_at_crossing: float
    lambda_cr: float


@dataclass(frozen=True)
class BranchPoint:
    location: ParameterPoint
    coalesced_value: ComplexEigenvalue
    residual: float
    converged: bool
    iterations: int = 0


def _scale2(model: TwoLevelModel, omega: float) -> float:
    return max(1.0, (model.gamma1 - model.gamma2) ** 2, omega * omega)


def classify(model: TwoLevelModel, omega: Optional[float] = None) -> CouplingRegime:
    """Regime of the level crossing at coupling `omega`.

    Raises
    ------
    NoCrossingError
        If the two levels have equal slopes.
    """
    omega = model.omega if omega is None else float(omega)
    lam_cr = model.lambda_cr
    f = discriminant(model, ParameterPoint(lam_cr, omega)).f_real
    tol = 1e-12 * _scale2(model, omega)
    if f > tol:
        regime = Regime.OVERCRITICAL
    elif f < -tol:
        regime = Regime.SUBCRITICAL
    else:
        regime = Regime.DOUBLE_POLE
    return CouplingRegime(regime, f, lam_cr)


def known_branch_points(model: TwoLevelModel) -> List[ParameterPoint]:
    """All real ``(lam, omega)`` where ``F`` vanishes; empty for parallel levels."""
    if model.slopes[0] == model.slopes[1]:
        return []
    lam = model.lambda_cr
    w = model.omega_cr
    if w == 0:
        return [ParameterPoint(lam, 0.0)]
    return [ParameterPoint(lam, w), ParameterPoint(lam, -w)]


def _coalesced(model: TwoLevelModel, lam: float) -> ComplexEigenvalue:
    return ComplexEigenvalue(0.5 * (model.e1(lam) + model.e2(lam)), 0.5 * (model.gamma1 + model.gamma2))


def find_branch_point(
    model: TwoLevelModel,
    initial: ParameterPoint,
    tol: float = BRANCH_TOL,
    max_iter: int = MAX_NEWTON,
) -> BranchPoint:
    """Solve ``F_R = F_I = 0`` for ``(lam, omega)`` by damped Newton.

    The Jacobian is analytic.  Where it is singular (e.g. the Hermitian case,
    where ``F_I`` vanishes identically) the minimum-norm least-squares step
    is used instead.  Steps are halved while they increase ``|F|``.

    Convergence is declared at ``|F| < tol`` or, failing that, when Newton
    stalls at the floating-point floor of ``F`` (``|F| <= 64 eps scale**2``).
    """
    x = initial.as_array()
    eps = np.finfo(float).eps

    def resid(v):
        return discriminant(model, ParameterPoint(float(v[0]), float(v[1]))).f

    f = resid(x)
    it = 0
    while abs(f) >= tol and it < max_iter:
        it += 1
        dl, dw = discriminant_gradient(model, ParameterPoint(float(x[0]), float(x[1])))
        jac = np.array([[dl.real, dw.real], [dl.imag, dw.imag]])
        rhs = -np.array([f.real, f.imag])
        if np.linalg.cond(jac) < 1e12:
            step = np.linalg.solve(jac, rhs)
        else:
            step = np.linalg.lstsq(jac, rhs, rcond=None)[0]
        t = 1.0
        xn = x + step
        fn = resid(xn)
        while abs(fn) > abs(f) and t > 2.0 ** -30:
            t *= 0.5
            xn = x + t * step
            fn = resid(xn)
        if abs(fn) > abs(f) or np.array_equal(xn, x):
            break
        x, f = xn, fn
    floor = 64 * eps * _scale2(model, float(x[1]))
    converged = abs(f) < tol or (abs(f) <= floor and abs(f) <= 1e-14)
    loc = ParameterPoint(float(x[0]), float(x[1]))
    return BranchPoint(loc, _coalesced(model, loc.lam), abs(f), bool(converged), it)


def find_degeneracy(
    hamiltonian: Callable[[ParameterPoint], np.ndarray],
    initial: ParameterPoint,
    tol: float = 1e-14,
    max_iter: int = MAX_NEWTON,
    fd_step: float = 1e-7,
) -> BranchPoint:
    """Locate a two-fold degeneracy of a general N-level family.

    Newton on the squared gap ``(E_a - E_b)**2`` of the closest eigenvalue
    pair, which is analytic through the branch point; the Jacobian is taken
    by central differences.
    """

    def gap2(v):
        w = np.linalg.eigvals(hamiltonian(ParameterPoint(float(v[0]), float(v[1]))))
        d = w[:, None] - w[None, :]
        np.fill_diagonal(d, np.inf)
        a, b = np.unravel_index(np.argmin(np.abs(d)), d.shape)
        return d[a, b] ** 2, 0.5 * (w[a] + w[b])

    x = initial.as_array()
    f, mid = gap2(x)
    it = 0
    while abs(f) >= tol and it < max_iter:
        it += 1
        cols = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = fd_step * max(1.0, abs(x[k]))
            cols.append((gap2(x + e)[0] - gap2(x - e)[0]) / (2 * e[k]))
        jac = np.array([[cols[0].real, cols[1].real], [cols[0].imag, cols[1].imag]])
        step = np.linalg.lstsq(jac, -np.array([f.real, f.imag]), rcond=None)[0]
        t = 1.0
        xn = x + step
        fn, mn = gap2(xn)
        while abs(fn) > abs(f) and t > 2.0 ** -30:
            t *= 0.5
            xn = x + t * step
            fn, mn = gap2(xn)
        if abs(fn) > abs(f) or np.array_equal(xn, x):
            break
        x, f, mid = xn, fn, mn
    loc = ParameterPoint(float(x[0]), float(x[1]))
    return BranchPoint(loc, ComplexEigenvalue.from_value(mid), abs(f), bool(abs(f) < tol), it)


@dataclass(frozen=True, eq=False)
class ExchangeReport:
    """What happens to the two states when `lam` sweeps through ``lam_cr``.

    `exchanged` is True when a continued branch changes its dominant
    unperturbed component between the segment ends.  `near_dp_overlap` is
    the modulus of the normalized ordinary overlap between ``phi_1`` at the
    segment end and ``phi_2`` at its start, and `realized_sign` the ``s``
    for which ``phi_1(after) ~ s * i * phi_2(before)``; both are computed
    for every coupling but only tend to 1 and a definite sign as the double
    pole is approached.  `near_double_pole` marks ``|F_R|`` inside the band.
    """

    regime: CouplingRegime
    exchanged: bool
    dominant_start: tuple
    dominant_end: tuple
    min_energy_gap: float
    min_width_gap: float
    energies_cross: bool
    widths_cross: bool
    near_double_pole: bool
    near_dp_overlap: Optional[float] = None
    realized_sign: Optional[int] = None
    values: Optional[np.ndarray] = None


def exchange_diagnostic(
    model: TwoLevelModel,
    lam_start: float,
    lam_end: float,
    omega: Optional[float] = None,
    steps: int = 400,
) -> ExchangeReport:
    """Continue both states along ``lam_start -> lam_end`` at fixed `omega`."""
    from .continuation import track

    omega = model.omega if omega is None else float(omega)
    reg = classify(model, omega)
    lo, hi = sorted((lam_start, lam_end))
    if not lo < reg.lambda_cr < hi:
        raise ContractViolation(f"segment [{lo}, {hi}] does not straddle lam_cr={reg.lambda_cr}")
    lams = np.linspace(lam_start, lam_end, steps + 1)
    tr = track(model, lambda s: ParameterPoint(float(s), omega), lams)
    v_first, v_last = tr.vectors[0], tr.vectors[-1]
    dom0 = tuple(int(j) for j in np.argmax(np.abs(v_first), axis=0))
    dom1 = tuple(int(j) for j in np.argmax(np.abs(v_last), axis=0))
    vals = np.array(tr.values)
    de = vals[:, 0].real - vals[:, 1].real
    dg = vals[:, 0].imag - vals[:, 1].imag
    near = abs(reg.f_real_at_crossing) < NEAR_DP_BAND * _scale2(model, omega)
    after, before = v_last[:, 0], v_first[:, 1]
    q = np.vdot(before, after) / (np.linalg.norm(before) * np.linalg.norm(after))
    overlap = float(abs(q))
    # q ~ s * i for phi_1(after) ~ s * i * phi_2(before)
    sign = 1 if q.imag >= 0 else -1
    return ExchangeReport(
        regime=reg,
        exchanged=dom0 != dom1,
        dominant_start=dom0,
        dominant_end=dom1,
        min_energy_gap=float(np.abs(de).min()),
        min_width_gap=float(2 * np.abs(dg).min()),
        energies_cross=bool(np.any(np.sign(de[1:]) != np.sign(de[:-1]))),
        widths_cross=bool(np.any(np.sign(dg[1:]) != np.sign(dg[:-1]))),
        near_double_pole=bool(near),
        near_dp_overlap=overlap,
        realized_sign=sign,
        values=vals,
    )


@dataclass(frozen=True, eq=False)
class ChiralReport:
    """Behaviour of individual and chiral vectors across ``lam_cr``.

    ``*_jump`` is the norm of the change between the grid points on either
    side of ``lam_cr``, taken modulo a sign for the individual vectors and
    modulo an overall phase for the chiral one; ``*_size`` is the larger
    norm at those two points.
    """

    lam: np.ndarray
    phi: np.ndarray
    chiral: np.ndarray
    signs: np.ndarray
    individual_jump: float
    individual_size: float
    chiral_jump: float
    chiral_size: float
    imag_sign_flip: bool


def _phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    # min over theta of ||v - exp(i theta) u||
    d2 = np.vdot(u, u).real + np.vdot(v, v).real - 2.0 * abs(np.vdot(u, v))
    return float(math.sqrt(max(d2, 0.0)))


def chiral_diagnostic(
    model: TwoLevelModel,
    lam_grid: Sequence[float],
    omega: Optional[float] = None,
    a1: complex = 1 / math.sqrt(2),
    a2: complex = 1 / math.sqrt(2),
) -> ChiralReport:
    """Compare ``phi_1, phi_2`` with ``a1 phi_1 +- i a2 phi_2`` across ``lam_cr``.

    Eigenvectors carry the deterministic labels of
    :func:`eig_complex_symmetric`.  At each node the sign in the chiral
    combination is the one that cancels the divergent common part of the two
    vectors (the smaller of the two candidates).  `omega` defaults to the
    critical coupling.
    """
    omega = model.omega_cr if omega is None else float(omega)
    lam = np.asarray(lam_grid, dtype=float)
    lam_cr = model.lambda_cr
    if np.any(lam == lam_cr) or not (lam.min() < lam_cr < lam.max()):
        raise ContractViolation("grid must straddle lam_cr without containing it")
    lam = np.sort(lam)
    phi = np.empty((lam.size, 2, 2), dtype=complex)
    chi = np.empty((lam.size, 2), dtype=complex)
    signs = np.empty(lam.size, dtype=int)
    for i, x in enumerate(lam):
        es = eig_complex_symmetric(build_hamiltonian(model, ParameterPoint(float(x), omega)))
        phi[i] = es.vectors
        cands = [chiral_superposition(es.vectors, a1, a2, s) for s in (1, -1)]
        k = int(np.argmin([np.linalg.norm(c) for c in cands]))
        chi[i] = cands[k]
        signs[i] = (1, -1)[k]
    j = int(np.searchsorted(lam, lam_cr))
    left, right = j - 1, j
    # c-normalized vectors are fixed up to a sign; the chiral combination
    # only up to an overall phase
    ind_jump = max(
        min(np.linalg.norm(phi[right, :, k] - s * phi[left, :, k]) for s in (1, -1)) for k in range(2)
    )
    ind_size = max(np.linalg.norm(phi[i, :, k]) for i in (left, right) for k in range(2))
    flip = bool(np.any(np.sign(phi[left].imag) * np.sign(phi[right].imag) < 0))
    return ChiralReport(
        lam=lam,
        phi=phi,
        chiral=chi,
        signs=signs,
        individual_jump=float(ind_jump),
        individual_size=float(ind_size),
        chiral_jump=_phase_distance(chi[left], chi[right]),
        chiral_size=float(max(np.linalg.norm(chi[left]), np.linalg.norm(chi[right]))),
        imag_sign_flip=flip,
    )
