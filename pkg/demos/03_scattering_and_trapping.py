"""Resonance S matrix: poles, residues, trapping and the double pole."""
import numpy as np

from doublepole import (
    EffectiveHamiltonianModel,
    ParameterPoint,
    TwoLevelModel,
    double_pole_smoothness,
    find_poles,
    isolated_width_deviation,
    ratio_form_factor,
    scan,
    trapping_sweep,
    two_level_effective_model,
    two_level_family,
)

# two states, one channel
m = EffectiveHamiltonianModel(np.diag([1.0, -1.0]), [[1.0], [1.0]])
ps = find_poles(m.scaled(0.3))
for p, g in zip(ps.poles, ps.couplings):
    print(f"pole E={p.energy:+.4f} Gamma={p.width:.4f}  g={g[0]:.4f}")

# Gamma ~ sum_c g_c^2 holds only while the resonances do not overlap
for a in (0.01, 0.1, 1, 5):
    print(f"alpha={a:<5} relative deviation {isolated_width_deviation(m.scaled(a)).max():.2e}")

# as the coupling grows one state takes nearly all the width
tr = trapping_sweep(m, [0.5, 1, 2, 5, 10])
for a, w in zip(tr.alphas, tr.widths):
    print(f"alpha={a:<4} widths {w.round(4)}  sum {w.sum():.4f}")

# at the double pole the S matrix is still smooth and unitary
model = TwoLevelModel(slopes=(1, -1), gamma1=1.0)
sc = scan(two_level_effective_model(model, ParameterPoint(0, 0.25)), np.linspace(-3, 3, 601))
print(f"at the EP: max unitarity defect {sc.unitarity_defect.max():.1e}")
fam = two_level_family(model, ParameterPoint(0, 0.25))
curve = double_pole_smoothness(fam, [0.1, 0.05, 0.025, 0.0125, 0], np.linspace(-3, 3, 601))
for d, v in zip(curve.deltas, curve.deviation):
    print(f"delta={d:<7} max |S(delta) - S(0)| = {v:.4f}")

# energy-dependent couplings: poles become self-consistent
dep = EffectiveHamiltonianModel([[2, 0.2], [0.2, 1]], [[0.6, 0.3], [0.4, 0.5]], [ratio_form_factor(1.0)] * 2)
ps = find_poles(dep)
print("energy-dependent poles:", ps.values.round(6), "iterations", ps.fixed_point_iterations)
