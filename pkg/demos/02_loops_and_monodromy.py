"""Carry the eigenbasis around closed loops in the (lambda, omega) plane.

Around a diabolic point both eigenvectors pick up a sign.  Around the branch
point the two states trade places, and the phase bookkeeping depends on the
convention: continuing with the c-product needs four turns to come back,
while the exchange rule closes after two.
"""
import numpy as np

from doublepole import Circle, Convention, LoopPath, ParameterPoint, TwoLevelModel, continue_eigensystem
from doublepole.continuation import measure_period

np.set_printoptions(precision=3, suppress=True)

hermitian = TwoLevelModel(slopes=(1, -1))
dp = LoopPath(ParameterPoint(0, 0), Circle(1.0), steps=1024)
print("diabolic point, one turn:\n", continue_eigensystem(hermitian, dp).phase_matrix.real)

model = TwoLevelModel(slopes=(1, -1), gamma1=1.0)
ep = LoopPath(ParameterPoint(0, 0.25), Circle(0.1), steps=512)

rep = continue_eigensystem(model, ep)
print("branch point, one turn, permutation", rep.branch_permutation)
print(rep.phase_matrix.real)
print("eigenvalues before", rep.initial_eigenvalues, "after", rep.final_eigenvalues)

for conv in Convention:
    for orient in ("positive", "negative"):
        path = LoopPath(ep.center, ep.shape, ep.steps, orient)
        m = continue_eigensystem(model, path, conv).phase_matrix
        m = np.round(m, 9) + 0.0  # drop -0 and roundoff
        print(f"{conv.value:22s} {orient:8s}", m.tolist())

for conv in Convention:
    print(f"period under {conv.value}: {measure_period(model, ep, conv)}")

# the trace is plot-ready: A_1 peaks where the loop passes closest to the EP
a1 = np.array([t.a_metrics[0] for t in rep.trace])
print(f"A_1 along the loop: min {a1.min():.3f}, max {a1.max():.3f}")
