"""
How many atoms must any sparse method use?
==========================================

Metric-entropy lower bounds on the number of atoms needed to reach a given
accuracy, evaluated for a few classical domains and confronted with what
Frank-Wolfe actually needs.
"""
from sparsefw import bounds, fw, geometry
from sparsefw.rng import make_rng

# bounds grow with the dimension, and only logarithmically with 1/eps
for d in (16, 64, 256):
    l1 = bounds.lower_bound_l1(d, 1 / 64)
    cube = bounds.lower_bound_cube(d, 1e-3)
    print(f"d={d:4d}  l1 ball {l1.value:7.2f}   cube {cube.value:6.2f}")

# the nuclear ball preset and its route through the infinite-vertex formula
closed = bounds.lower_bound_nuclear(8, 8, 1e-3)
general = bounds.lower_bound_nuclear_general(8, 8, 1e-3)
print(f"nuclear 8x8: closed form {closed.value:.3f}, general formula {general.value:.3f}")

# a measured sparsity must never fall below the bound at the same tolerance
d = 16
report = bounds.lower_bound_l1(d, 1 / 16)
rng = make_rng(1)
ball = geometry.L1Ball(d)
targets = [geometry.random_point(ball, rng) for _ in range(30)]
est = fw.min_sparsity_to_tolerance(ball, targets, report.dist_tol, "best")
print(bounds.empirical_vs_bound(est.k, report, est.eps ** 2).dump())

# tolerance conventions are checked, not assumed
try:
    bounds.empirical_vs_bound(est.k, report, report.inputs["stated_f_tol"])
except ValueError as exc:
    print("refused:", str(exc)[:90], "...")
