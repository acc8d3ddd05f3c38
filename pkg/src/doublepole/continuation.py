"""Adiabatic continuation of eigenpairs along paths in the (lam, omega) plane.

Eigenvectors are carried from step to step by matching c-overlaps and fixing
the sign so that each overlap has positive real part.  Around a closed loop
the continued basis, re-expressed in the initial one, gives the monodromy
matrix.  Two bookkeeping conventions are offered:

``CPRODUCT``
    plain numerical continuation; entries of the monodromy matrix are +-1.
``EXCHANGE_RULE``
    the exchange rule for two-level systems, where every overcritical
    crossing of ``lam_cr`` maps ``{phi1, phi2} -> {-i phi2, +i phi1}``
    (detuning decreasing through zero) or ``{+i phi2, -i phi1}`` (detuning
    increasing), and subcritical crossings leave the pair untouched.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .branch import Regime, classify, known_branch_points
from .eigensystem import BiorthogonalEigensystem, eig_complex_symmetric
from .errors import ContinuityError, ContractViolation, LoopHitsEPError
from .model import ParameterPoint, TwoLevelModel, build_hamiltonian

__all__ = [
    "Convention",
    "Orientation",
    "Circle",
    "Polyline",
    "LoopPath",
    "TraceStep",
    "Crossing",
    "MonodromyReport",
    "SurfaceScan",
    "track",
    "continue_eigensystem",
    "measure_period",
    "eigenvalue_surface_scan",
    "matrix_period",
    "is_phased_permutation",
]

MATCH_THRESHOLD = 0.8
MAX_BISECTIONS = 12
PERIOD_TOL = 1e-6

# exchange matrices: row k is the new content of slot k in the old basis
_FORWARD = np.array([[0, -1j], [1j, 0]])
_REVERSE = np.array([[0, 1j], [-1j, 0]])


class Convention(str, enum.Enum):
    CPRODUCT = "c-product-continuity"
    EXCHANGE_RULE = "exchange-rule"


class Orientation(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class Circle:
    """Ellipse ``(lam_c + r_lam cos t, omega_c + r_omega sin t)``."""

    radius_lam: float
    radius_omega: Optional[float] = None

    def __post_init__(self):
        if self.radius_omega is None:
            object.__setattr__(self, "radius_omega", self.radius_lam)
        if not (self.radius_lam > 0 and self.radius_omega > 0):
            raise ContractViolation("circle radii must be positive")

    def at(self, center: ParameterPoint, frac: float) -> ParameterPoint:
        t = 2.0 * math.pi * frac
        return ParameterPoint(
            center.lam + self.radius_lam * math.cos(t),
            center.omega + self.radius_omega * math.sin(t),
        )


@dataclass(frozen=True)
class Polyline:
    """Closed polygon through `vertices`, traversed at uniform arc length."""

    vertices: tuple

    def __post_init__(self):
        verts = [v if isinstance(v, ParameterPoint) else ParameterPoint(*v) for v in self.vertices]
        if len(verts) > 1 and verts[0] == verts[-1]:
            verts = verts[:-1]
        if len(verts) < 3:
            raise ContractViolation("a closed polyline needs at least three distinct vertices")
        object.__setattr__(self, "vertices", tuple(verts))
        pts = np.array([v.as_array() for v in verts] + [verts[0].as_array()])
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg == 0):
            raise ContractViolation("repeated consecutive vertices")
        object.__setattr__(self, "_pts", pts)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum())

    def at(self, center: ParameterPoint, frac: float) -> ParameterPoint:
        cum, pts = self._cum, self._pts
        i = min(int(np.searchsorted(cum, frac, side="right")) - 1, len(cum) - 2)
        t = (frac - cum[i]) / (cum[i + 1] - cum[i])
        lam, om = pts[i] + t * (pts[i + 1] - pts[i])
        return ParameterPoint(float(lam), float(om))


@dataclass(frozen=True)
class LoopPath:
    """Closed path traversed `turns` times with `steps` base steps per turn."""

    center: ParameterPoint
    shape: Union[Circle, Polyline]
    steps: int = 512
    orientation: Orientation = Orientation.POSITIVE
    turns: int = 1

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        if int(self.steps) != self.steps or self.steps < 16:
            raise ContractViolation("steps must be an integer >= 16")
        if int(self.turns) != self.turns or self.turns < 1:
            raise ContractViolation("turns must be a positive integer")

    def point(self, s: float) -> ParameterPoint:
        """Point at loop parameter `s`; integer `s` is exactly the start."""
        frac = s - math.floor(s)
        if self.orientation is Orientation.NEGATIVE and frac != 0.0:
            frac = 1.0 - frac
        return self.shape.at(self.center, frac)

    @property
    def start(self) -> ParameterPoint:
        return self.point(0.0)

    def with_turns(self, turns: int) -> "LoopPath":
        return LoopPath(self.center, self.shape, self.steps, self.orientation, turns)

    def reversed(self) -> "LoopPath":
        other = Orientation.NEGATIVE if self.orientation is Orientation.POSITIVE else Orientation.POSITIVE
        return LoopPath(self.center, self.shape, self.steps, other, self.turns)

    def min_distance(self, points: Sequence[ParameterPoint], samples: int = 4096) -> float:
        if not points:
            return math.inf
        s = np.linspace(0.0, 1.0, samples, endpoint=False)
        path = np.array([self.point(x).as_array() for x in s])
        return min(float(np.linalg.norm(path - p.as_array(), axis=1).min()) for p in points)


@dataclass(frozen=True)
class TraceStep:
    step: int
    s: float
    point: ParameterPoint
    eigenvalues: np.ndarray
    a_metrics: np.ndarray
    b12: float
    min_overlap: float
    depth: int
    flags: tuple = ()


@dataclass(frozen=True)
class Crossing:
    """An intersection of the path with ``lam = lam_cr``."""

    step: int
    omega: float
    regime: Regime
    direction: int  # +1: detuning decreasing through zero


@dataclass(frozen=True, eq=False)
class MonodromyReport:
    """Outcome of continuing the eigenbasis around a closed loop.

    ``phase_matrix[k, l]`` is the coefficient of initial vector ``l`` in the
    vector that started as ``k``; `branch_permutation[k]` is the initial
    branch index that branch `k` ends on.
    """

    branch_permutation: tuple
    phase_matrix: np.ndarray
    period: Optional[int]
    convention: Convention
    trace: List[TraceStep]
    continuity_matrix: np.ndarray
    turn_matrices: List[np.ndarray]
    initial_eigenvalues: np.ndarray
    final_eigenvalues: np.ndarray
    crossings: List[Crossing] = field(default_factory=list)
    permutation_consistent: bool = True

    @property
    def is_phased_permutation(self) -> bool:
        return is_phased_permutation(self.phase_matrix)


@dataclass
class _Track:
    s: List[float]
    points: List[ParameterPoint]
    systems: List[BiorthogonalEigensystem]
    vectors: List[np.ndarray]
    values: List[np.ndarray]
    overlaps: List[float]
    depths: List[int]
    base_index: List[int]


def _as_hfn(model) -> Callable[[ParameterPoint], np.ndarray]:
    if isinstance(model, TwoLevelModel):
        return lambda p: build_hamiltonian(model, p)
    if callable(model):
        return model
    raise ContractViolation("model must be a TwoLevelModel or a callable ParameterPoint -> matrix")


def _solve(hfn, p: ParameterPoint, step: int) -> BiorthogonalEigensystem:
    es = eig_complex_symmetric(hfn(p))
    if es.ep_flag:
        raise LoopHitsEPError(f"degenerate eigensystem at step {step}, point {p}: {es.diagnostic}", step)
    return es


def _match(prev: np.ndarray, es: BiorthogonalEigensystem):
    c = prev.T @ es.vectors
    rows, cols = linear_sum_assignment(-np.abs(c))
    perm = cols[np.argsort(rows)]
    ov = c[np.arange(len(perm)), perm]
    if np.abs(ov).min() <= MATCH_THRESHOLD:
        return None
    vec = es.vectors[:, perm] * np.where(ov.real < 0, -1.0, 1.0)[None, :]
    return vec, es.eigenvalues[perm], float(np.abs(ov).min())


def track(model, point_at: Callable[[float], ParameterPoint], s_grid: Sequence[float], initial_vectors=None) -> _Track:
    """Continue all eigenpairs over the base grid `s_grid`.

    Steps whose branch matching is ambiguous (any matched c-overlap at or
    below 0.8) are bisected, up to 12 levels deep.
    """
    hfn = _as_hfn(model)
    s_grid = list(s_grid)
    es0 = _solve(hfn, point_at(s_grid[0]), 0)
    if initial_vectors is None:
        v0, w0 = es0.vectors, es0.eigenvalues
    else:
        matched = _match(np.asarray(initial_vectors), es0)
        if matched is None:
            raise ContinuityError("initial vectors do not match the eigenbasis at the start", 0)
        v0, w0, _ = matched
    tr = _Track([s_grid[0]], [point_at(s_grid[0])], [es0], [v0], [w0], [1.0], [0], [0])

    def advance(sa, sb, depth, base):
        p = point_at(sb)
        es = _solve(hfn, p, base)
        got = _match(tr.vectors[-1], es)
        if got is None:
            if depth >= MAX_BISECTIONS:
                raise ContinuityError(f"branch matching failed after {MAX_BISECTIONS} bisections at step {base}", base)
            mid = 0.5 * (sa + sb)
            advance(sa, mid, depth + 1, base)
            advance(mid, sb, depth + 1, base)
            return
        vec, val, ov = got
        tr.s.append(sb)
        tr.points.append(p)
        tr.systems.append(es)
        tr.vectors.append(vec)
        tr.values.append(val)
        tr.overlaps.append(ov)
        tr.depths.append(depth)
        tr.base_index.append(base)

    for i in range(1, len(s_grid)):
        advance(s_grid[i - 1], s_grid[i], 0, i)
    return tr


def is_phased_permutation(m: np.ndarray, tol: float = 1e-6) -> bool:
    """True if every row and column holds one unit-modulus entry, rest ~0."""
    a = np.abs(np.asarray(m))
    big = a > 0.5
    if not (np.all(big.sum(axis=0) == 1) and np.all(big.sum(axis=1) == 1)):
        return False
    return bool(np.all(np.abs(a[big] - 1) < tol) and np.all(a[~big] < tol))


def matrix_period(m: np.ndarray, max_power: int = 8, tol: float = PERIOD_TOL) -> Optional[int]:
    """Smallest ``p <= max_power`` with ``||m**p - I|| < tol``."""
    m = np.asarray(m, dtype=complex)
    eye = np.eye(m.shape[0])
    acc = eye.astype(complex)
    for p in range(1, max_power + 1):
        acc = acc @ m
        if np.abs(acc - eye).max() < tol:
            return p
    return None


def _permutation_of(m: np.ndarray) -> tuple:
    return tuple(int(j) for j in np.argmax(np.abs(m), axis=1))


def _crossings(model: TwoLevelModel, tr: _Track) -> List[Crossing]:
    out = []
    last_sign, last_idx = 0, 0
    for i, p in enumerate(tr.points):
        d = model.detuning(p.lam)
        sgn = (d > 0) - (d < 0)
        if sgn == 0:
            continue
        if last_sign and sgn != last_sign:
            pa, pb = tr.points[last_idx], p
            da = model.detuning(pa.lam)
            t = da / (da - d)
            om = pa.omega + t * (pb.omega - pa.omega)
            regime = classify(model, om).regime
            out.append(Crossing(tr.base_index[i], om, regime, 1 if last_sign > 0 else -1))
        last_sign, last_idx = sgn, i
    return out


def _exchange_matrix(crossings: Sequence[Crossing]) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for c in crossings:
        if c.regime is Regime.OVERCRITICAL:
            m = m @ (_FORWARD if c.direction > 0 else _REVERSE)
    return m


def continue_eigensystem(
    model,
    path: LoopPath,
    convention: Convention = Convention.CPRODUCT,
    delta_min: float = 1e-3,
    branch_points: Sequence[ParameterPoint] = (),
) -> MonodromyReport:
    """Carry the eigenbasis `path.turns` times around `path`.

    Parameters
    ----------
    model : TwoLevelModel or callable
        A callable must map a :class:`ParameterPoint` to a complex symmetric
        matrix; the exchange-rule convention needs a :class:`TwoLevelModel`.
    path : LoopPath
    convention : Convention
    delta_min : float
        Minimum allowed distance between the path and any known branch
        point (those of a two-level model are added automatically).

    Raises
    ------
    LoopHitsEPError
        The path comes within `delta_min` of a branch point, or the
        eigensystem degenerates on the way.
    ContinuityError
        Bisection could not resolve branch matching.
    """
    convention = Convention(convention)
    if convention is Convention.EXCHANGE_RULE and not isinstance(model, TwoLevelModel):
        raise ContractViolation("the exchange rule is defined for two-level models only")
    bps = list(branch_points)
    if isinstance(model, TwoLevelModel):
        bps += known_branch_points(model)
    dist = path.min_distance(bps)
    if dist < delta_min:
        raise LoopHitsEPError(f"path passes within {dist:.3g} of a branch point (delta_min={delta_min:g})", None)

    n = path.steps * path.turns
    s_grid = [k / path.steps for k in range(n + 1)]
    tr = track(model, path.point, s_grid)

    last, min_ov, depth = {}, {}, {}
    for j, base in enumerate(tr.base_index):
        last[base] = j
        min_ov[base] = min(min_ov.get(base, 1.0), tr.overlaps[j])
        depth[base] = max(depth.get(base, 0), tr.depths[j])

    crossings: List[Crossing] = []
    if convention is Convention.EXCHANGE_RULE:
        crossings = _crossings(model, tr)
    v0 = tr.vectors[0]
    cont_mats, turn_mats = [], []
    for t in range(1, path.turns + 1):
        base = t * path.steps
        mc = tr.vectors[last[base]].T @ v0
        cont_mats.append(mc)
        if convention is Convention.EXCHANGE_RULE:
            turn_mats.append(_exchange_matrix([c for c in crossings if c.step <= base]))
        else:
            turn_mats.append(mc)
    mc, m = cont_mats[-1], turn_mats[-1]
    perm = _permutation_of(mc)

    trace = []
    for base in range(1, n + 1):
        j = last[base]
        vec = tr.vectors[j]
        g = np.abs(vec.conj().T @ vec)
        trace.append(
            TraceStep(
                step=base,
                s=tr.s[j],
                point=tr.points[j],
                eigenvalues=tr.values[j],
                a_metrics=g.diagonal().copy(),
                b12=float(g[0, 1]) if g.shape[0] > 1 else 0.0,
                min_overlap=min_ov[base],
                depth=depth[base],
                flags=tuple(f"crossing:{c.regime.value}" for c in crossings if c.step == base),
            )
        )
    return MonodromyReport(
        branch_permutation=perm,
        phase_matrix=m,
        period=matrix_period(m),
        convention=convention,
        trace=trace,
        continuity_matrix=mc,
        turn_matrices=turn_mats,
        initial_eigenvalues=tr.values[0],
        final_eigenvalues=tr.values[-1],
        crossings=crossings,
        permutation_consistent=_permutation_of(m) == perm,
    )


def measure_period(
    model,
    path: LoopPath,
    convention: Convention = Convention.CPRODUCT,
    max_turns: int = 8,
    **kwargs,
) -> Optional[int]:
    """Number of turns after which the continued basis is fully restored.

    The loop is actually traversed `max_turns` times; the answer is the
    smallest turn count ``p`` with ``||M_p - I|| < 1e-6``, or None.
    """
    if not 1 <= max_turns <= 8:
        raise ContractViolation("max_turns must lie in 1..8")
    rep = continue_eigensystem(model, path.with_turns(max_turns), convention, **kwargs)
    eye = np.eye(rep.phase_matrix.shape[0])
    for p, mp in enumerate(rep.turn_matrices, start=1):
        if np.abs(mp - eye).max() < PERIOD_TOL:
            return p
    return None


@dataclass(frozen=True, eq=False)
class SurfaceScan:
    """Eigenvalue branches over a (omega, lam) grid.

    ``values[i, j, k]`` is branch `k` at ``(lam[j], omega[i])``.
    """

    lam: np.ndarray
    omega: np.ndarray
    values: np.ndarray
    flags: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return self.values.real

    @property
    def widths(self) -> np.ndarray:
        return -2.0 * self.values.imag


def eigenvalue_surface_scan(model, lam_grid, omega_grid, delta_min: float = 1e-3) -> SurfaceScan:
    """Both eigenvalue sheets over a parameter grid, labelled by continuation.

    Labels follow the first row along `lam_grid`, then each row starts from
    the node below it.  Nodes within `delta_min` of a branch point are
    flagged; there the matching falls back to eigenvalue proximity.
    """
    lam = np.asarray(lam_grid, dtype=float)
    om = np.asarray(omega_grid, dtype=float)
    for g, name in ((lam, "lam"), (om, "omega")):
        if g.size == 0 or not np.all(np.isfinite(g)):
            raise ContractViolation(f"{name} grid must be finite and non-empty")
        if g.size > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
            raise ContractViolation(f"{name} grid must be monotone")
    hfn = _as_hfn(model)
    bps = known_branch_points(model) if isinstance(model, TwoLevelModel) else []
    n = hfn(ParameterPoint(float(lam[0]), float(om[0]))).shape[0]
    values = np.empty((om.size, lam.size, n), dtype=complex)
    flags = np.zeros((om.size, lam.size), dtype=bool)
    vecs = np.empty((om.size, lam.size), dtype=object)

    def node(i, j, ref):
        p = ParameterPoint(float(lam[j]), float(om[i]))
        near = any(math.hypot(p.lam - b.lam, p.omega - b.omega) < delta_min for b in bps)
        es = eig_complex_symmetric(hfn(p))
        flagged = near or es.ep_flag
        w, v = es.eigenvalues, es.vectors
        if ref is not None:
            rw, rv, rflag = ref
            if flagged or rflag:
                cost = np.abs(rw[:, None] - w[None, :])
            else:
                cost = -np.abs(rv.T @ v)
            rows, cols = linear_sum_assignment(cost)
            perm = cols[np.argsort(rows)]
            w, v = w[perm], v[:, perm]
            if not (flagged or rflag):
                ov = np.sum(rv * v, axis=0)
                v = v * np.where(ov.real < 0, -1.0, 1.0)[None, :]
        values[i, j] = w
        flags[i, j] = flagged
        vecs[i, j] = v

    for i in range(om.size):
        for j in range(lam.size):
            if i == 0 and j == 0:
                ref = None
            elif j == 0:
                ref = (values[i - 1, 0], vecs[i - 1, 0], flags[i - 1, 0])
            else:
                ref = (values[i, j - 1], vecs[i, j - 1], flags[i, j - 1])
            node(i, j, ref)
    return SurfaceScan(lam, om, values, flags)
