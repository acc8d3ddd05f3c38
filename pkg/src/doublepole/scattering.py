"""Resonance S matrix, its poles and residues.

The full matrix is ``S(E) = I - i W^T (E - H_eff(E))^{-1} W``, which is
unitary on the real axis for a real coupling matrix.  Expanding the resolvent
in the c-normalized eigenbasis of ``H_eff`` gives one pole term per
resonance, ``-i g_k g_k^T / (E - E_k)`` with amplitudes ``g_k = phi_k^T W``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .eigensystem import ComplexEigenvalue, eig_complex_symmetric
from .errors import ContractViolation, DoublePoleError, InvalidEnergyError, SingularityError
from .model import (
    EffectiveHamiltonianModel,
    ParameterPoint,
    TwoLevelModel,
    build_effective_hamiltonian,
    two_level_effective_model,
)

__all__ = [
    "SMatrixScan",
    "EigenExpansion",
    "PoleSet",
    "TrappingSweep",
    "SmoothnessCurve",
    "s_matrix",
    "scan",
    "unitarity_defect",
    "eigenbasis_expansion",
    "find_poles",
    "isolated_width_deviation",
    "trapping_sweep",
    "two_level_family",
    "double_pole_smoothness",
]

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX = 200


def s_matrix(model: EffectiveHamiltonianModel, energy) -> np.ndarray:
    """``S(E) = I - i W^T (E - H_eff)^{-1} W`` at one energy.

    A complex `energy` is accepted for energy-independent models only.
    """
    if isinstance(energy, complex) or np.iscomplexobj(energy):
        if not model.energy_independent:
            raise ContractViolation("complex energies need energy-independent couplings")
        e_ff = 0.0
    else:
        e_ff = float(energy)
    w = model.coupling(e_ff)
    h = build_effective_hamiltonian(model, e_ff)
    a = energy * np.eye(model.n_states) - h
    try:
        x = np.linalg.solve(a, w)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"resolvent is singular at E={energy!r}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularityError(f"resolvent is singular at E={energy!r}")
    return np.eye(model.n_channels) - 1j * (w.T @ x)


def unitarity_defect(s: np.ndarray) -> float:
    """Spectral norm of ``S^dagger S - I``."""
    return float(np.linalg.norm(s.conj().T @ s - np.eye(s.shape[0]), ord=2))


@dataclass(frozen=True, eq=False)
class SMatrixScan:
    energies: np.ndarray
    s_matrices: np.ndarray
    unitarity_defect: np.ndarray
    symmetry_defect: np.ndarray


def scan(model: EffectiveHamiltonianModel, energies: Sequence[float]) -> SMatrixScan:
    """S matrix on a real energy grid with per-point unitarity diagnostics."""
    e = np.asarray(energies, dtype=float)
    s = np.array([s_matrix(model, float(x)) for x in e])
    eye = np.eye(model.n_channels)
    udef = np.linalg.norm(np.conj(np.swapaxes(s, 1, 2)) @ s - eye, ord=2, axis=(1, 2))
    sdef = np.abs(s - np.swapaxes(s, 1, 2)).max(axis=(1, 2))
    return SMatrixScan(e, s, udef, sdef)


@dataclass(frozen=True, eq=False)
class EigenExpansion:
    """Pole decomposition of ``S(E)`` at one energy."""

    energy: float
    poles: tuple
    couplings: np.ndarray
    terms: np.ndarray
    background: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.background + self.terms.sum(axis=0)

    def residues(self) -> np.ndarray:
        """``-i g_k g_k^T`` for every pole."""
        g = self.couplings
        return -1j * g[:, :, None] * g[:, None, :]


def eigenbasis_expansion(model: EffectiveHamiltonianModel, energy: float) -> EigenExpansion:
    """Expand ``S(E)`` over the resonances of ``H_eff(E)``.

    Raises
    ------
    DoublePoleError
        If ``H_eff(E)`` is at (or numerically at) an exceptional point.
    """
    h = build_effective_hamiltonian(model, energy)
    es = eig_complex_symmetric(h)
    if es.ep_flag:
        raise DoublePoleError(f"H_eff is defective at E={energy!r}: {es.diagnostic}")
    w = model.coupling(energy)
    g = es.vectors.T @ w
    z = es.eigenvalues
    terms = -1j * g[:, :, None] * g[:, None, :] / (energy - z)[:, None, None]
    return EigenExpansion(energy, es.values, g, terms, np.eye(model.n_channels, dtype=complex))


@dataclass(frozen=True, eq=False)
class PoleSet:
    poles: tuple
    residues: np.ndarray
    couplings: np.ndarray
    fixed_point_iterations: tuple
    converged: tuple

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.poles])


def _clip_to_domain(model: EffectiveHamiltonianModel, e: float) -> float:
    lo = max(ff.lower for ff in model.form_factors)
    hi = min(ff.upper for ff in model.form_factors)
    if lo < e < hi:
        return e
    width = hi - lo if math.isfinite(hi - lo) else 1.0
    return min(max(e, lo + 1e-3 * width), hi - 1e-3 * width)


def _fixed_point(model, z0: complex, tol: float, max_iter: int):
    e = _clip_to_domain(model, z0.real)
    z = z0
    step_prev = None
    relax = 1.0
    for it in range(1, max_iter + 1):
        vals = np.linalg.eigvals(build_effective_hamiltonian(model, e))
        z = vals[np.argmin(np.abs(vals - z))]
        step = z.real - e
        if step_prev is not None and step * step_prev < 0 and abs(step) >= 0.5 * abs(step_prev):
            relax = 0.5
        e_new = e + relax * step
        if abs(e_new - e) < tol * max(1.0, abs(e)):
            return e_new, z, it, True
        e, step_prev = e_new, step
    return e, z, max_iter, False


def find_poles(
    model: EffectiveHamiltonianModel,
    initial: Optional[Sequence[complex]] = None,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX,
) -> PoleSet:
    """S-matrix poles, residues and coupling amplitudes.

    For constant form factors the poles are the eigenvalues of ``H_eff``.
    Otherwise each branch is iterated to self-consistency,
    ``E <- Re E_k(H_eff(E))``, starting from `initial` (default: the
    eigenvalues of ``h0``), with the step halved when it starts to oscillate.
    """
    if model.energy_independent:
        e_fp = [0.0] * model.n_states
        z_fp = [None] * model.n_states
        iters = (0,) * model.n_states
        ok = (True,) * model.n_states
    else:
        starts = np.linalg.eigvalsh(model.h0) if initial is None else np.asarray(initial, dtype=complex)
        e_fp, z_fp, iters, ok = [], [], [], []
        for z0 in starts:
            try:
                e, z, n, conv = _fixed_point(model, complex(z0), tol, max_iter)
            except InvalidEnergyError:
                e, z, n, conv = math.nan, None, max_iter, False
            e_fp.append(e)
            z_fp.append(z)
            iters.append(n)
            ok.append(conv)
        iters, ok = tuple(iters), tuple(ok)

    poles, gs = [], []
    for k, e in enumerate(e_fp):
        if not math.isfinite(e):
            poles.append(ComplexEigenvalue(math.nan, math.nan))
            gs.append(np.full(model.n_channels, np.nan, dtype=complex))
            continue
        es = eig_complex_symmetric(build_effective_hamiltonian(model, e))
        if es.ep_flag:
            raise DoublePoleError(f"H_eff is defective at E={e!r}; poles are not simple")
        g_all = es.vectors.T @ model.coupling(e)
        if model.energy_independent:
            j = k
        else:
            j = int(np.argmin(np.abs(es.eigenvalues - z_fp[k])))
        poles.append(es.values[j])
        gs.append(g_all[j])
    g = np.array(gs)
    residues = -1j * g[:, :, None] * g[:, None, :]
    return PoleSet(tuple(poles), residues, g, tuple(iters), tuple(ok))


def isolated_width_deviation(model: EffectiveHamiltonianModel, energy: float = 0.0) -> np.ndarray:
    """``|Gamma_k - sum_c g_kc**2| / Gamma_k`` for every resonance."""
    ex = eigenbasis_expansion(model, energy)
    widths = np.array([p.width for p in ex.poles])
    partial = np.sum(ex.couplings ** 2, axis=1)
    return np.abs(widths - partial) / widths


@dataclass(frozen=True, eq=False)
class TrappingSweep:
    alphas: np.ndarray
    widths: np.ndarray  # (n_alpha, N), each row descending

    @property
    def width_sums(self) -> np.ndarray:
        return self.widths.sum(axis=1)


def trapping_sweep(model: EffectiveHamiltonianModel, alpha_grid: Sequence[float], energy: float = 0.0) -> TrappingSweep:
    """Resonance widths as the coupling is scaled by each ``alpha``."""
    alphas = np.asarray(alpha_grid, dtype=float)
    if np.any(alphas < 0) or np.any(np.diff(alphas) < 0):
        raise ContractViolation("alpha grid must be nonnegative and ascending")
    rows = []
    for a in alphas:
        vals = np.linalg.eigvals(build_effective_hamiltonian(model.scaled(float(a)), energy))
        rows.append(np.sort(-2.0 * vals.imag)[::-1])
    return TrappingSweep(alphas, np.array(rows))


def two_level_family(
    model: TwoLevelModel,
    ep: ParameterPoint,
    direction: Sequence[float] = (0.0, 1.0),
) -> Callable[[float], EffectiveHamiltonianModel]:
    """Map a distance ``delta`` from `ep` along `direction` to a scattering model."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)

    def at(delta: float) -> EffectiveHamiltonianModel:
        p = ParameterPoint(ep.lam + delta * d[0], ep.omega + delta * d[1])
        return two_level_effective_model(model, p)

    return at


@dataclass(frozen=True, eq=False)
class SmoothnessCurve:
    deltas: np.ndarray
    deviation: np.ndarray
    unitarity: np.ndarray


def double_pole_smoothness(
    family: Callable[[float], EffectiveHamiltonianModel],
    deltas: Sequence[float],
    energies: Sequence[float],
) -> SmoothnessCurve:
    """``d(delta) = max_E ||S(E; delta) - S(E; 0)||`` over a real grid.

    Also records the worst unitarity defect for each ``delta``.
    """
    e = np.asarray(energies, dtype=float)
    ref = scan(family(0.0), e)
    dev, uni = [], []
    for delta in deltas:
        sc = ref if delta == 0 else scan(family(float(delta)), e)
        diff = sc.s_matrices - ref.s_matrices
        dev.append(float(np.linalg.norm(diff, ord=2, axis=(1, 2)).max()))
        uni.append(float(sc.unitarity_defect.max()))
    return SmoothnessCurve(np.asarray(deltas, dtype=float), np.array(dev), np.array(uni))
