"""Random polytopes, spherical caps and the average-case volume bound.

Containment of a ball in a random hull is tested one-sidedly by sampling
directions: a direction whose support value falls below ``r`` certifies that
``r B`` is not contained, the absence of one is only evidence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundReport, _report, lower_bound_volume
from .rng import as_rng, make_rng
from .special import betainc_reg, normal_sf

__all__ = [
    "RandomPolytopeSample", "sample_polytope",
    "cap_measure", "cap_measure_mc", "cap_lower_bound_prop_b2", "cap_lower_bound_simplified",
    "ContainmentResult", "inscribed_ball_test", "lemma_b1_exponent", "randpoly_bound_pipeline",
    "borell_norm_bound", "gaussian_norm_tail", "max_normal_mean",
]

KINDS = ("spherical", "gaussian")


@dataclass(frozen=True)
class RandomPolytopeSample:
    kind: str
    d: int
    m: int
    vertices: np.ndarray
    seed: int

    @property
    def max_norm(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())


def sample_polytope(kind: str, d: int, m: int, seed: int, *, trial_index: int = 0) -> RandomPolytopeSample:
    """``m`` iid vertices, uniform on the sphere or standard Gaussian in ``R^d``.

    Samples with ``m <= d`` are allowed so that degenerate hulls can be
    studied; they never contain a ball.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}")
    if d < 2 or m < 1:
        raise ValueError("need d >= 2 and m >= 1")
    rng = make_rng(seed, trial_index, f"polytope/{kind}")
    V = rng.standard_normal((m, d))
    if kind == "spherical":
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    return RandomPolytopeSample(kind, d, m, V, int(seed))


def cap_measure(r: float, d: int) -> float:
    """``mu(r) = P(<v, e1> >= r)`` for ``v`` uniform on the sphere, via the incomplete beta."""
    if not 0.0 <= r < 1.0:
        raise ValueError("r must lie in [0, 1)")
    if d < 2:
        raise ValueError("d must be >= 2")
    return 0.5 * betainc_reg(0.5 * (d - 1), 0.5, 1.0 - r * r)


def cap_measure_mc(r: float, d: int, samples: int, seed=0) -> tuple[float, float]:
    """Monte-Carlo cap measure and its standard error.

    Only the first coordinate matters, so it is drawn as ``g1 / sqrt(g1^2 + chi2_{d-1})``.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError("r must lie in [0, 1)")
    rng = as_rng(seed)
    g1 = rng.standard_normal(samples)
    rest = rng.chisquare(d - 1, samples)
    hits = g1 >= r * np.sqrt(g1 * g1 + rest)
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1.0 - p), 1e-300) / samples)


def cap_lower_bound_prop_b2(eps: float, t: float, d: int) -> float:
    """Lower bound on ``mu(eps/(1+t))``: ``Q(eps sqrt d) - exp(-t^2 d / 2)``, ``Q`` the normal upper tail."""
    if not 0.0 < eps < 1.0 or t <= 0:
        raise ValueError("need eps in (0, 1) and t > 0")
    return normal_sf(eps * math.sqrt(d)) - math.exp(-0.5 * t * t * d)


def cap_lower_bound_simplified(d: int) -> float:
    """``1/sqrt(8 pi e) - exp(-d/2)``, a weaker closed form for ``mu(1/(2 sqrt d))``."""
    return 1.0 / math.sqrt(8.0 * math.pi * math.e) - math.exp(-0.5 * d)


@dataclass(frozen=True)
class ContainmentResult:
    violated: bool
    min_support: float
    direction: np.ndarray | None
    n_dirs: int

    @property
    def result(self) -> str:
        return "violated" if self.violated else "no_violation_found"


def inscribed_ball_test(sample: RandomPolytopeSample, r: float, n_dirs: int, seed=0,
                        chunk: int = 8192) -> ContainmentResult:
    """Search for a direction ``u`` with ``max_i <v_i, u> < r``."""
    if r < 0 or n_dirs < 1:
        raise ValueError("need r >= 0 and n_dirs >= 1")
    rng = as_rng(seed)
    V = sample.vertices
    best, best_u = math.inf, None
    done = 0
    while done < n_dirs:
        b = min(chunk, n_dirs - done)
        U = rng.standard_normal((b, sample.d))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        h = (U @ V.T).max(axis=1)
        j = int(np.argmin(h))
        if h[j] < best:
            best, best_u = float(h[j]), U[j].copy()
        done += b
    violated = best < r
    return ContainmentResult(violated, best, best_u if violated else None, n_dirs)


def lemma_b1_exponent(d: int, m: int, r: float | None = None) -> dict:
    """Exponents of the containment-failure bound ``2 exp(d log m - m mu(r))``.

    Reports the exact-cap version and the version with ``mu`` replaced by 1/20.
    """
    r = 1.0 / (2.0 * math.sqrt(d)) if r is None else r
    mu = cap_measure(r, d)
    exact = d * math.log(m) - m * mu
    coarse = d * math.log(m) - m / 20.0
    return {"r": r, "mu": mu, "exponent": exact, "exponent_1_20": coarse,
            "failure_bound": min(1.0, 2.0 * math.exp(min(exact, 700.0)))}


def randpoly_bound_pipeline(d: int, m: int, delta: float, seed: int, *, kind: str = "spherical",
                            n_dirs: int = 100_000, trial_index: int = 0) -> BoundReport:
    """Sample a polytope, test ball containment and emit the volume bound it supports.

    Spherical hulls are tested at ``r = 1/(2 sqrt d)``. Gaussian hulls are
    tested at ``r = 1`` and scaled by their measured largest vertex norm
    ``R``, which puts them in the unit ball with ``varpi^(1/d) >= 1/R``.
    The covering scale is ``eps = sqrt(delta/(4d))``.
    """
    sample = sample_polytope(kind, d, m, seed, trial_index=trial_index)
    eps = math.sqrt(delta / (4.0 * d))
    if kind == "spherical":
        r, radius = 1.0 / (2.0 * math.sqrt(d)), 1.0
        root = r
    else:
        r, radius = 1.0, sample.max_norm
        root = r / radius
    test = inscribed_ball_test(sample, r, n_dirs, make_rng(seed, trial_index, "directions"))
    inputs = {"kind": kind, "m": m, "delta": delta, "r": r, "min_support": test.min_support,
              "n_dirs": n_dirs, "seed": seed, "normalization": radius}
    if kind == "spherical":
        inputs.update({k: v for k, v in lemma_b1_exponent(d, m, r).items() if k != "r"})
    else:
        # a Gaussian vertex clears a hyperplane at distance r with probability Q(r)
        inputs["exponent"] = d * math.log(m) - m * normal_sf(r)
    base = lower_bound_volume(min(root, 1.0), d, m, eps, formula_id="thm34_randpoly", inputs=inputs,
                              note="bounds S(P/R, eps^2/4) = S(P, delta/(16 d)) in units of R")
    if not test.violated:
        return BoundReport(base.formula_id, base.value, base.eps, base.f_tol, base.dim, base.n_vertices,
                           base.inputs, base.flags, base.tolerance_note, radius)
    inputs["uncertified_value"] = base.value
    return _report("thm34_randpoly", 0.0, eps, base.f_tol, dim=d, n_vertices=m, inputs=inputs,
                   extra_flags=("containment_refuted",), note="containment refuted at this seed",
                   normalization=radius)


# -- Gaussian estimators -------------------------------------------------------

def borell_norm_bound(t: float, d: int) -> float:
    """``P(|g| >= (1+t) sqrt d) <= exp(-t^2 d / 2)``."""
    return math.exp(-0.5 * t * t * d)


def gaussian_norm_tail(d: int, t: float, samples: int, seed=0) -> tuple[float, float]:
    """Empirical frequency of ``|g| >= (1+t) sqrt d`` and its standard error."""
    rng = as_rng(seed)
    sq = rng.chisquare(d, samples)
    hit = sq >= ((1.0 + t) ** 2) * d
    p = float(hit.mean())
    return p, math.sqrt(p * (1.0 - p) / samples)


def max_normal_mean(n: int, reps: int, seed=0) -> tuple[float, float]:
    """Mean of the maximum of ``n`` iid standard normals over ``reps`` replications, with its standard error."""
    rng = as_rng(seed)
    mx = rng.standard_normal((reps, n)).max(axis=1)
    return float(mx.mean()), float(mx.std(ddof=1) / math.sqrt(reps))
