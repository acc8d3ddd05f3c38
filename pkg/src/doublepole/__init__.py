"""Double poles of the S matrix, exceptional points and loop monodromy.

A small numerical toolkit around non-Hermitian (complex symmetric)
effective Hamiltonians: two-level and N-level models, bi-orthogonal
eigensystems, branch-point search, adiabatic continuation around loops, and
the resonance S matrix with its poles.
"""
from .branch import (
    BranchPoint,
    CouplingRegime,
    Regime,
    chiral_diagnostic,
    classify,
    exchange_diagnostic,
    find_branch_point,
    find_degeneracy,
    known_branch_points,
)
from .continuation import (
    Circle,
    Convention,
    LoopPath,
    MonodromyReport,
    Orientation,
    Polyline,
    continue_eigensystem,
    eigenvalue_surface_scan,
    measure_period,
)
from .eigensystem import (
    BiorthogonalEigensystem,
    ComplexEigenvalue,
    c_product,
    chiral_superposition,
    eig_complex_symmetric,
    eigenvalues_two_level,
    overlap_metrics,
)
from .errors import (
    ContinuityError,
    ContractViolation,
    DoublePoleError,
    InvalidEnergyError,
    LoopHitsEPError,
    NoCrossingError,
    SingularityError,
)
from .model import (
    EffectiveHamiltonianModel,
    FormFactor,
    ParameterPoint,
    TwoLevelModel,
    build_effective_hamiltonian,
    build_hamiltonian,
    constant_form_factor,
    discriminant,
    ratio_form_factor,
    two_level_effective_model,
)
from .scattering import (
    double_pole_smoothness,
    eigenbasis_expansion,
    find_poles,
    isolated_width_deviation,
    s_matrix,
    scan,
    trapping_sweep,
    two_level_family,
)

__version__ = "0.1.0"
