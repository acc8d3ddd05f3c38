"""Two levels crossing in energy, with one of them decaying.

Sweep the coupling through its critical value and watch the eigenvalue
trajectories change character, then locate the branch point itself.
"""
import numpy as np

from doublepole import (
    ParameterPoint,
    TwoLevelModel,
    classify,
    eig_complex_symmetric,
    exchange_diagnostic,
    find_branch_point,
)

model = TwoLevelModel(slopes=(1, -1), gamma1=1.0, gamma2=0.0)
print(f"levels cross at lambda = {model.lambda_cr}, critical coupling {model.omega_cr}")

# below, at and above the critical coupling
for omega in (0.2, 0.25, 0.3):
    r = classify(model, omega)
    print(f"omega={omega:<5} F_R={r.f_real_at_crossing:+.3f}  {r.regime.value}")

# overcritical: energies repel, widths cross, the states are exchanged
for omega in (0.3, 0.2):
    rep = exchange_diagnostic(model, -1.0, 1.0, omega=omega)
    print(
        f"omega={omega}: energies cross={rep.energies_cross}, widths cross={rep.widths_cross}, "
        f"exchanged={rep.exchanged}"
    )

bp = find_branch_point(model, ParameterPoint(0.1, 0.3))
print(f"branch point ({bp.location.lam:.3g}, {bp.location.omega:.12g}), "
      f"E = {bp.coalesced_value.value:.6g}, {bp.iterations} Newton steps")

# approaching the double pole the ordinary norms of the c-normalized
# eigenvectors blow up
for d in (1e-1, 1e-3, 1e-5, 1e-7):
    es = eig_complex_symmetric(model.hamiltonian(ParameterPoint(0.0, 0.25 + d)))
    print(f"omega=0.25+{d:g}: A_1={es.a_metrics[0]:.4g}  B_12={es.b_metrics[0, 1]:.4g}")

es = eig_complex_symmetric(model.hamiltonian(bp.location))
print("at the branch point:", es.diagnostic)

lam = np.linspace(-1, 1, 9)
vals = np.array([eig_complex_symmetric(model.hamiltonian(ParameterPoint(x, 0.3))).eigenvalues for x in lam])
print("overcritical trajectory (E, Gamma):")
for x, (z1, z2) in zip(lam, vals):
    print(f"  {x:+.2f}  ({z1.real:+.3f}, {-2 * z1.imag:.3f})  ({z2.real:+.3f}, {-2 * z2.imag:.3f})")
