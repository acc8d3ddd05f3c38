"""Parametric Hamiltonian families and the two-level discriminant.

Two families are provided:

* :class:`TwoLevelModel`, a 2x2 complex symmetric matrix whose diagonal
  carries affine level energies ``e_k(lam) = a_k + b_k * lam`` and decay
  widths ``gamma_k``, coupled by a real ``omega``;
* :class:`EffectiveHamiltonianModel`, an N-level system coupled to C decay
  channels, ``h0 - (i/2) W(E) W(E)^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractViolation, InvalidEnergyError, NoCrossingError

__all__ = [
    "ParameterPoint",
    "TwoLevelModel",
    "DiscriminantValue",
    "FormFactor",
    "constant_form_factor",
    "ratio_form_factor",
    "EffectiveHamiltonianModel",
    "build_hamiltonian",
    "discriminant",
    "discriminant_gradient",
    "build_effective_hamiltonian",
    "two_level_effective_model",
]


@dataclass(frozen=True)
class ParameterPoint:
    """A point ``(lam, omega)`` in the two-parameter plane."""

    lam: float
    omega: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.omega)):
            raise ContractViolation(f"non-finite parameter point {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.lam, self.omega], dtype=float)


@dataclass(frozen=True)
class TwoLevelModel:
    """Two resonance states with affine energies and constant widths.

    Parameters
    ----------
    intercepts, slopes : pair of float
        ``e_k(lam) = intercepts[k] + slopes[k] * lam``.
    gamma1, gamma2 : float
        Widths of the unperturbed states, both nonnegative.
    omega : float
        Default real coupling, used when a :class:`ParameterPoint` is not
        given.
    """

    intercepts: tuple = (0.0, 0.0)
    slopes: tuple = (1.0, -1.0)
    gamma1: float = 0.0
    gamma2: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "intercepts", tuple(float(x) for x in self.intercepts))
        object.__setattr__(self, "slopes", tuple(float(x) for x in self.slopes))
        if len(self.intercepts) != 2 or len(self.slopes) != 2:
            raise ContractViolation("two-level model needs two intercepts and two slopes")
        if isinstance(self.omega, complex) and self.omega.imag != 0:
            raise ContractViolation("complex coupling is not supported")
        for name in ("gamma1", "gamma2", "omega"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ContractViolation(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ContractViolation("widths must be nonnegative")

    def e1(self, lam: float) -> float:
        return self.intercepts[0] + self.slopes[0] * lam

    def e2(self, lam: float) -> float:
        return self.intercepts[1] + self.slopes[1] * lam

    def detuning(self, lam: float) -> float:
        """``e1(lam) - e2(lam)``."""
        return self.e1(lam) - self.e2(lam)

    @property
    def lambda_cr(self) -> float:
        """Parameter value where the unperturbed energies cross."""
        db = self.slopes[0] - self.slopes[1]
        if db == 0:
            raise NoCrossingError("levels are parallel; e1(lam) = e2(lam) has no solution")
        return (self.intercepts[1] - self.intercepts[0]) / db

    @property
    def omega_cr(self) -> float:
        """Positive coupling at which the crossing becomes a double pole."""
        return abs(self.gamma1 - self.gamma2) / 4.0

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.gamma1), abs(self.gamma2), abs(self.omega))

    def point(self, lam: float, omega: Optional[float] = None) -> ParameterPoint:
        return ParameterPoint(lam, self.omega if omega is None else omega)

    def hamiltonian(self, p: ParameterPoint) -> np.ndarray:
        return build_hamiltonian(self, p)


@dataclass(frozen=True)
class DiscriminantValue:
    f: complex

    @property
    def f_real(self) -> float:
        return self.f.real

    @property
    def f_imag(self) -> float:
        return self.f.imag

    def __abs__(self):
        return abs(self.f)


def build_hamiltonian(model: TwoLevelModel, p: ParameterPoint) -> np.ndarray:
    """Complex symmetric 2x2 matrix at parameter point `p`.

    The diagonal is ``e_k(lam) - i gamma_k / 2`` and the off-diagonal is the
    coupling ``p.omega``.
    """
    h = np.empty((2, 2), dtype=complex)
    h[0, 0] = complex(model.e1(p.lam), -0.5 * model.gamma1)
    h[1, 1] = complex(model.e2(p.lam), -0.5 * model.gamma2)
    h[0, 1] = h[1, 0] = p.omega
    return h


def discriminant(model: TwoLevelModel, p: ParameterPoint) -> DiscriminantValue:
    """Discriminant ``F`` whose square root is the eigenvalue splitting.

    ``F = [(e1 - e2) - (i/2)(gamma1 - gamma2)]**2 + 4 omega**2``; it vanishes
    exactly where the two eigenvalues coalesce.
    """
    d = complex(model.detuning(p.lam), -0.5 * (model.gamma1 - model.gamma2))
    return DiscriminantValue(d * d + 4.0 * p.omega * p.omega)


def discriminant_gradient(model: TwoLevelModel, p: ParameterPoint) -> tuple:
    """Complex partial derivatives ``(dF/dlam, dF/domega)``."""
    d = complex(model.detuning(p.lam), -0.5 * (model.gamma1 - model.gamma2))
    db = model.slopes[0] - model.slopes[1]
    return 2.0 * d * db, 8.0 * p.omega


@dataclass(frozen=True)
class FormFactor:
    """Real scalar channel form factor ``g(E)`` on an open interval."""

    fn: Callable[[float], float]
    lower: float = -math.inf
    upper: float = math.inf
    name: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def is_constant(self) -> bool:
        return self.name == "constant"

    def __call__(self, energy: float) -> float:
        if not (self.lower < energy < self.upper):
            raise InvalidEnergyError(
                f"energy {energy!r} outside form-factor domain ({self.lower}, {self.upper})"
            )
        return float(self.fn(energy))


def constant_form_factor(value: float = 1.0) -> FormFactor:
    return FormFactor(lambda e: value, name="constant", params={"value": value})


def ratio_form_factor(shift: float = 1.0) -> FormFactor:
    """``g(E) = E / (E + shift)`` on ``E > 0``."""
    if shift <= 0:
        raise ContractViolation("shift must be positive")
    return FormFactor(lambda e: e / (e + shift), lower=0.0, name="ratio", params={"shift": shift})


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonianModel:
    """N states coupled to C channels through a real coupling matrix.

    ``H_eff(E) = h0 - (i/2) W(E) W(E)^T`` with ``W(E)[k, c] = w[k, c] * g_c(E)``.
    Form factors default to the constant 1, in which case ``H_eff`` does not
    depend on energy.
    """

    h0: np.ndarray
    w: np.ndarray
    form_factors: Optional[Sequence[FormFactor]] = None

    def __post_init__(self):
        h0 = np.atleast_2d(np.asarray(self.h0, dtype=float))
        w = np.asarray(self.w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        n = h0.shape[0]
        if h0.shape != (n, n) or n < 1:
            raise ContractViolation(f"h0 must be square, got shape {h0.shape}")
        if not np.array_equal(h0, h0.T):
            raise ContractViolation("h0 must be symmetric")
        if w.ndim != 2 or w.shape[0] != n or w.shape[1] < 1:
            raise ContractViolation(f"w must have shape ({n}, C>=1), got {w.shape}")
        object.__setattr__(self, "h0", _frozen(h0))
        object.__setattr__(self, "w", _frozen(w))
        ffs = self.form_factors
        if ffs is None:
            ffs = tuple(constant_form_factor() for _ in range(w.shape[1]))
        else:
            ffs = tuple(ffs)
        if len(ffs) != w.shape[1]:
            raise ContractViolation("need one form factor per channel")
        object.__setattr__(self, "form_factors", ffs)

    @property
    def n_states(self) -> int:
        return self.h0.shape[0]

    @property
    def n_channels(self) -> int:
        return self.w.shape[1]

    @property
    def energy_independent(self) -> bool:
        return all(ff.is_constant for ff in self.form_factors)

    def coupling(self, energy: float) -> np.ndarray:
        """Energy-dependent coupling matrix ``W(E)``."""
        g = np.array([ff(energy) for ff in self.form_factors])
        return self.w * g[None, :]

    def scaled(self, alpha: float) -> "EffectiveHamiltonianModel":
        return EffectiveHamiltonianModel(self.h0, alpha * self.w, self.form_factors)


def build_effective_hamiltonian(model: EffectiveHamiltonianModel, energy: float = 0.0) -> np.ndarray:
    """``h0 - (i/2) W(E) W(E)^T`` as a complex symmetric matrix.

    Raises
    ------
    InvalidEnergyError
        If `energy` is outside the domain of a non-constant form factor.
    """
    if not math.isfinite(energy):
        raise InvalidEnergyError("energy must be finite")
    wm = model.coupling(energy)
    return model.h0 - 0.5j * (wm @ wm.T)


def two_level_effective_model(model: TwoLevelModel, p: ParameterPoint) -> EffectiveHamiltonianModel:
    """Embed the two-level model at `p` as a two-channel N=2 model.

    Each state decays into its own channel with coupling ``sqrt(gamma_k)``;
    ``omega`` sits in the real internal Hamiltonian.
    """
    h0 = np.array([[model.e1(p.lam), p.omega], [p.omega, model.e2(p.lam)]])
    w = np.diag([math.sqrt(model.gamma1), math.sqrt(model.gamma2)])
    return EffectiveHamiltonianModel(h0, w)
