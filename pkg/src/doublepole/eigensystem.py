"""Bi-orthogonal eigensystems of complex symmetric matrices.

For ``H = H^T`` (not Hermitian) the left eigenvectors are the complex
conjugates of the right ones, so eigenvectors are normalized with the
bilinear c-product ``(u, v) = sum_j u_j v_j`` rather than the sesquilinear
inner product.  The ordinary norms ``A_k = <phi_k|phi_k>`` then measure how
far the system is from Hermitian; they diverge at an exceptional point.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractViolation
from .model import ParameterPoint, TwoLevelModel, discriminant

__all__ = [
    "EP_THRESHOLD",
    "ComplexEigenvalue",
    "BiorthogonalEigensystem",
    "c_product",
    "c_normalize",
    "eigenvalues_two_level",
    "eig_complex_symmetric",
    "overlap_metrics",
    "chiral_superposition",
    "sort_eigenvalues",
]

#: c-norm (of a unit vector) below which a degeneracy is declared
EP_THRESHOLD = 1e-8
MAX_DIM = 64
PAIR_GAP = 1e-7
PAIR_CNORM = 1e-6


@dataclass(frozen=True)
class ComplexEigenvalue:
    """Resonance eigenvalue ``energy - (i/2) width``."""

    energy: float
    width: float

    @classmethod
    def from_value(cls, z: complex) -> "ComplexEigenvalue":
        z = complex(z)
        return cls(z.real, -2.0 * z.imag)

    @property
    def value(self) -> complex:
        return complex(self.energy, -0.5 * self.width)

    def __complex__(self):
        return self.value


def c_product(u: np.ndarray, v: np.ndarray) -> complex:
    """Bilinear pairing ``sum_j u_j v_j`` (no conjugation)."""
    return complex(np.sum(np.asarray(u) * np.asarray(v)))


def c_normalize(v: np.ndarray) -> np.ndarray:
    """Scale `v` so that ``c_product(v, v) == 1`` (principal square root)."""
    v = np.asarray(v, dtype=complex)
    return v / cmath.sqrt(c_product(v, v))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # largest component (first among ties) gets argument in (-pi/2, pi/2]
    mag = np.abs(v)
    j = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-12))[0])
    phase = cmath.phase(v[j])
    if phase <= -math.pi / 2 or phase > math.pi / 2:
        return -v
    return v


def sort_eigenvalues(values: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Indices ordering `values` by real part, ties broken by imaginary part.

    Real parts closer than ``tol * max(1, max|values|)`` count as ties.
    """
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        return np.zeros(0, dtype=int)
    scale = tol * max(1.0, float(np.abs(values).max()))
    order = list(np.argsort(values.real, kind="stable"))
    result = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and values.real[order[j]] - values.real[order[i]] <= scale:
            j += 1
        group = sorted(order[i:j], key=lambda k: values.imag[k])
        result.extend(group)
        i = j
    return np.array(result, dtype=int)


def eigenvalues_two_level(model: TwoLevelModel, p: ParameterPoint) -> tuple:
    """Closed-form eigenvalue pair ``mean +- sqrt(F) / 2``, sorted."""
    mean = 0.5 * complex(model.e1(p.lam) + model.e2(p.lam), -0.5 * (model.gamma1 + model.gamma2))
    root = 0.5 * cmath.sqrt(discriminant(model, p).f)
    pair = np.array([mean - root, mean + root])
    return tuple(ComplexEigenvalue.from_value(pair[k]) for k in sort_eigenvalues(pair))


@dataclass(frozen=True, eq=False)
class BiorthogonalEigensystem:
    """Eigenvalues and c-normalized right eigenvectors (as columns).

    Left eigenvectors are the entrywise conjugates of `vectors`.  When
    `ep_flag` is set, the flagged columns are returned with unit ordinary
    norm instead, because their c-norm is numerically zero.
    """

    values: tuple
    vectors: np.ndarray
    a_metrics: np.ndarray
    b_metrics: np.ndarray
    ep_flag: bool
    flagged: tuple = ()
    diagnostic: str = ""

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([v.value for v in self.values])

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def c_gram(self) -> np.ndarray:
        """Matrix of c-products between all pairs of eigenvectors."""
        return self.vectors.T @ self.vectors

    def ordinary_gram(self) -> np.ndarray:
        return self.vectors.conj().T @ self.vectors

    def antisymmetry_defect(self) -> float:
        """Largest ``|Re <phi_k|phi_l>|`` over ``k != l``.

        Zero for two-level systems; generally nonzero once N >= 3.
        """
        g = self.ordinary_gram()
        off = g - np.diag(np.diag(g))
        return float(np.abs(off.real).max()) if off.size else 0.0


def _c_orthogonalize_cluster(v: np.ndarray, idx: Sequence[int]) -> None:
    # Gram-Schmidt with the c-product inside one degenerate eigenspace
    done = []
    for k in idx:
        x = v[:, k].copy()
        for j in done:
            cjj = c_product(v[:, j], v[:, j])
            if abs(cjj) < PAIR_CNORM:
                return
            x -= c_product(v[:, j], x) / cjj * v[:, j]
        nrm = np.linalg.norm(x)
        if nrm > 0:
            v[:, k] = x / nrm
        done.append(k)


def eig_complex_symmetric(
    h: np.ndarray,
    ep_threshold: float = EP_THRESHOLD,
    symmetry_tol: float = 1e-12,
) -> BiorthogonalEigensystem:
    """Diagonalize a complex symmetric matrix with c-normalized vectors.

    Parameters
    ----------
    h : (N, N) array_like
        Complex symmetric matrix, ``N <= 64``.
    ep_threshold : float
        An eigenvector with unit ordinary norm whose c-norm ``|v . v|`` falls
        below this value is not normalized; `ep_flag` is set instead.

    Returns
    -------
    BiorthogonalEigensystem
        Eigenvalues sorted by real then imaginary part.  Each normalized
        vector has its overall sign chosen so that its largest-magnitude
        component has argument in ``(-pi/2, pi/2]``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    if n > MAX_DIM:
        raise ContractViolation(f"dimension {n} exceeds {MAX_DIM}")
    hscale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.T).max() > symmetry_tol * hscale:
        raise ContractViolation("matrix is not complex symmetric")

    w, v = np.linalg.eig(h)
    order = sort_eigenvalues(w)
    w, v = w[order], v[:, order].copy()

    # exactly degenerate (non-defective) eigenspaces: any basis is valid,
    # so pick a c-orthogonal one
    k = 0
    while k < n:
        j = k + 1
        while j < n and abs(w[j] - w[k]) <= 1e-10 * hscale:
            j += 1
        if j - k > 1:
            _c_orthogonalize_cluster(v, range(k, j))
        k = j

    flagged = []
    for k in range(n):
        x = v[:, k] / np.linalg.norm(v[:, k])
        c = c_product(x, x)
        # LAPACK splits a defective eigenvalue by ~sqrt(eps), leaving a
        # c-norm of the same order, so a coalesced pair is caught separately
        coalesced = abs(c) < PAIR_CNORM and any(
            abs(w[k] - w[j]) < PAIR_GAP * hscale for j in range(n) if j != k
        )
        if abs(c) < ep_threshold or coalesced:
            flagged.append(k)
            v[:, k] = x
        else:
            v[:, k] = _fix_sign(x / cmath.sqrt(c))

    if flagged:
        a = np.sum(np.abs(v) ** 2, axis=0)
        a[flagged] = np.inf
        g = np.abs(v.conj().T @ v)
        g[flagged, :] = np.inf
        g[:, flagged] = np.inf
        np.fill_diagonal(g, 0.0)
        b = g
        diag = (
            f"c-norm below {ep_threshold:g} for eigenvalue index(es) {flagged}; "
            "near-degenerate (exceptional point), vectors left unnormalized"
        )
    else:
        a, b = overlap_metrics(v, check=False)
        diag = ""
    for arr in (a, b, v):
        arr.setflags(write=False)
    return BiorthogonalEigensystem(
        values=tuple(ComplexEigenvalue.from_value(z) for z in w),
        vectors=v,
        a_metrics=a,
        b_metrics=b,
        ep_flag=bool(flagged),
        flagged=tuple(flagged),
        diagnostic=diag,
    )


def overlap_metrics(vectors, check: bool = True, tol: float = 1e-8) -> tuple:
    """Ordinary-inner-product metrics of c-normalized vectors.

    Parameters
    ----------
    vectors : (N, K) array_like
        Eigenvectors as columns.

    Returns
    -------
    a_metrics : (K,) ndarray
        ``A_k = <phi_k|phi_k>``, at least 1 for c-normalized vectors.
    b_metrics : (K, K) ndarray
        ``B_k^l = |<phi_k|phi_l>|`` off the diagonal, zero on it.
    """
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if check:
        cn = np.sum(v * v, axis=0)
        if np.abs(cn - 1).max() > tol:
            raise ContractViolation("vectors are not c-normalized")
    g = v.conj().T @ v
    a = g.diagonal().real.copy()
    b = np.abs(g)
    np.fill_diagonal(b, 0.0)
    return a, b


def chiral_superposition(vectors, a1: complex, a2: complex, sign: int = 1) -> np.ndarray:
    """``a1 * phi_1 + sign * i * a2 * phi_2`` for exactly two vectors.

    `vectors` may be a pair of 1-D arrays or an (N, 2) array of columns.
    """
    if sign not in (1, -1):
        raise ContractViolation("sign must be +1 or -1")
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = [vectors[:, k] for k in range(vectors.shape[1])]
    else:
        cols = [np.asarray(x, dtype=complex) for x in vectors]
    if len(cols) != 2:
        raise ContractViolation(f"need exactly two vectors, got {len(cols)}")
    return a1 * cols[0] + sign * 1j * a2 * cols[1]
