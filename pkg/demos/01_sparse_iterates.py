"""
Sparse iterates and convergence
===============================

Frank-Wolfe builds each iterate from the atoms returned by the oracle, so
the t-th iterate uses at most t + 1 atoms. Here we watch that count, the
objective and the duality gap on an l1 ball.
"""
import numpy as np

from sparsefw import fw, geometry
from sparsefw.rng import make_rng

rng = make_rng(0)
ball = geometry.L1Ball(30)
target = geometry.random_point(ball, rng)

# one run per variant, same target and budget
for algo in ("vanilla_harmonic", "vanilla", "away", "fully_corrective"):
    tr = fw.run_algorithm(algo, ball, target, 60, rng=rng)
    print(f"{algo:18s} f={tr.f_final:.3e}  gap={tr.gap[-1]:.3e}  atoms={tr.final.sparsity():2d}  "
          f"steps={len(tr) - 1}  {tr.status}")

# the classical envelope 16/(t+2) for this diameter-2 domain
tr = fw.fw_vanilla(ball, target, 200, "harmonic")
t = tr.iters
print("max (f - f*) (t + 2):", float(((tr.f - 0.0) * (t + 2)).max()))
assert (tr.sparsity <= t + 1).all()

# a target outside the ball: the gap upper-bounds the suboptimality
outside = 1.7 * target / np.abs(target).sum()
f_star = fw.reference_optimum(ball, outside)
tr = fw.fw_away(ball, outside, 100)
print("gap >= f - f* everywhere:", bool((tr.gap >= tr.f - f_star - 1e-12).all()))

# the trace serializes to CSV
print(tr.to_csv().splitlines()[:3])
