"""
Random polytopes contain a ball
===============================

The hull of many random unit vectors contains a ball of radius 1/(2 sqrt d)
with overwhelming probability, which makes its volume ratio, and hence its
lower bound, large.
"""
import math

from sparsefw import randpoly
from sparsefw.rng import make_rng

d = 8
r = 1 / (2 * math.sqrt(d))

# cap measure: exact incomplete beta against Monte Carlo
for dim in (6, 20, 100):
    rr = 1 / (2 * math.sqrt(dim))
    p, se = randpoly.cap_measure_mc(rr, dim, 200_000, make_rng(dim))
    print(f"d={dim:3d}  mu={randpoly.cap_measure(rr, dim):.4f}  mc={p:.4f} +- {se:.4f}")

# containment for many vertices, failure for a bare simplex
for m in (2000, d + 1):
    sample = randpoly.sample_polytope("spherical", d, m, seed=0)
    res = randpoly.inscribed_ball_test(sample, r, 50_000, seed=1)
    print(f"m={m:5d}: {res.result}, smallest support {res.min_support:.3f} vs r={r:.3f}")
print("lemma exponent:", randpoly.lemma_b1_exponent(d, 2000))

# the full pipeline returns a report with every input recorded
rep = randpoly.randpoly_bound_pipeline(d, 2000, 1 / 16, seed=0, n_dirs=50_000)
print(rep.formula_id, round(rep.value, 4), rep.flags)
