"""Early-stopped Frank-Wolfe as an estimator in the Gaussian sequence model.

We observe ``y = mu_star + g / sqrt(n)`` and run a conditional-gradient method
on the empirical risk ``x -> |y - x|^2`` over the hull of a unit-norm
dictionary. The excess risk of the output is measured against the true risk
minimizer ``mu_bar``, which every synthetic instance knows by construction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .fw import fw_fully_corrective, run_algorithm
from .geometry import DenseVector, FinitePolytope, Simplex
from .rng import as_rng, make_rng

__all__ = [
    "SequenceModelInstance", "make_dictionary", "make_instance", "RiskRecord", "run_aggregation",
    "erm_reference", "localized_bound_terms", "envelope", "sup_span_oracle", "fit_envelope_constant",
    "place_interior", "interior_radius", "fast_rate_steps", "interior_fast_rate_study",
    "exterior_rate_study", "fast_rate_trial", "exterior_trial", "summarize_rate_rows", "exterior_steps",
    "fit_loglog_slope", "linear_rate_check", "linear_rate_trial", "interior_targets",
]

DICTIONARIES = ("gaussian", "cross")


@dataclass(frozen=True)
class SequenceModelInstance:
    mu_star: np.ndarray
    dictionary: np.ndarray
    y: np.ndarray
    seed: int
    noise_scale: float
    mu_bar: np.ndarray | None = None
    kind: str = "gaussian"
    frame: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.dictionary.shape[0]

    def domain(self) -> FinitePolytope:
        return FinitePolytope(self.dictionary, n_dirs=64)

    def excess_risk(self, mu_hat) -> float:
        if self.mu_bar is None:
            raise ValueError("mu_bar unknown; pass it to make_instance or use erm_reference")
        a = self.mu_star - np.asarray(mu_hat)
        b = self.mu_star - self.mu_bar
        return float(a @ a - b @ b)


def make_dictionary(m: int, n: int, rng, kind: str = "gaussian") -> tuple[np.ndarray, np.ndarray | None]:
    """Unit-norm dictionary rows and, for ``cross``, the orthonormal frame.

    ``gaussian`` draws ``m`` normalized Gaussian vectors. ``cross`` takes
    ``m/2`` random orthonormal directions and their negatives, so its hull is
    a rotated l1 ball with inradius ``1/sqrt(m/2)``.
    """
    rng = as_rng(rng)
    if kind == "gaussian":
        D = rng.standard_normal((m, n))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        return D, None
    if kind == "cross":
        if m % 2 or m // 2 > n:
            raise ValueError("cross dictionary needs even m with m/2 <= n")
        q, _ = np.linalg.qr(rng.standard_normal((n, m // 2)))
        frame = q.T
        return np.vstack([frame, -frame]), frame
    raise ValueError(f"unknown dictionary kind {kind!r}; choose from {DICTIONARIES}")


def make_instance(n: int, m: int, seed: int, *, mu_star=None, dictionary=None, mu_bar=None,
                  noise_scale: float | None = None, kind: str = "gaussian", frame=None,
                  trial_index: int = 0) -> SequenceModelInstance:
    """Draw ``y = mu_star + scale * g`` with ``scale = 1/sqrt(n)`` unless overridden.

    Without ``mu_star`` a random convex combination of the dictionary is used,
    which is then its own risk minimizer.
    """
    if dictionary is None:
        dictionary, frame = make_dictionary(m, n, make_rng(seed, trial_index, "dictionary"), kind)
    D = np.asarray(dictionary, dtype=float)
    if D.shape != (m, n):
        raise ValueError(f"dictionary must have shape ({m}, {n})")
    norms = np.linalg.norm(D, axis=1)
    if np.abs(norms - 1.0).max() > 1e-12:
        raise ValueError("dictionary rows must have unit norm")
    if mu_star is None:
        lam = make_rng(seed, trial_index, "weights").dirichlet(np.ones(m))
        mu_star = lam @ D
        mu_bar = mu_star
    mu_star = np.asarray(mu_star, dtype=float)
    scale = 1.0 / math.sqrt(n) if noise_scale is None else float(noise_scale)
    g = make_rng(seed, trial_index, "noise").standard_normal(n)
    y = mu_star + scale * g
    return SequenceModelInstance(mu_star, D, y, int(seed), scale,
                                 None if mu_bar is None else np.asarray(mu_bar, dtype=float), kind, frame)


# -- bound terms -------------------------------------------------------------

def envelope(k: int, m: int, eta: float) -> float:
    """``sqrt(3k + 6(pi + k log m)) + sqrt(2 log(1/eta))``, a high-probability bound on the
    supremum of ``<u, g>`` over unit vectors in spans of ``k`` dictionary atoms."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return math.sqrt(3 * k + 6 * (math.pi + k * math.log(m))) + math.sqrt(2 * math.log(1.0 / eta))


@dataclass(frozen=True)
class LocalizedTerms:
    envelope: float
    localized: float    # (8/n) * envelope**2
    sparse_term: float  # k log m / n
    tail_term: float    # sqrt(k log m) log(1/eta) / n


def localized_bound_terms(n: int, m: int, k: int, eta: float = 0.1) -> LocalizedTerms:
    env = envelope(k, m, eta)
    klm = k * math.log(m)
    return LocalizedTerms(env, 8.0 * env * env / n, klm / n, math.sqrt(klm) * math.log(1.0 / eta) / n)


def sup_span_oracle(dictionary, g, k: int) -> tuple[float, tuple]:
    """``max`` over ``k``-subsets ``S`` of ``sup_{u in span S, |u|=1} <u, g>``, by enumeration.

    The inner supremum is the norm of the projection of ``g`` onto ``span S``.
    """
    D = np.asarray(dictionary, dtype=float)
    g = np.asarray(g, dtype=float)
    best, arg = -math.inf, ()
    for S in itertools.combinations(range(D.shape[0]), k):
        q, _ = np.linalg.qr(D[list(S)].T)
        v = float(np.linalg.norm(q.T @ g))
        if v > best:
            best, arg = v, S
    return best, arg


# -- aggregation runs ----------------------------------------------------------

@dataclass(frozen=True)
class RiskRecord:
    k: int
    opt_err: float
    excess_risk: float
    sparse_term: float
    tail_term: float
    sparsity: int


def erm_reference(instance: SequenceModelInstance, budget: int = 1000, gap_tol: float = 1e-13):
    """Long fully-corrective run on the empirical risk; returns ``(f_ref, point)``."""
    tr = fw_fully_corrective(instance.domain(), instance.y, budget, inner_iters=500, gap_tol=gap_tol)
    return float(tr.f.min()), tr.final.point


def _start_atom(instance: SequenceModelInstance):
    j = int(np.argmax(instance.dictionary @ instance.y))
    return DenseVector(instance.dictionary[j])


def run_aggregation(instance: SequenceModelInstance, k_steps: int, algo: str = "vanilla", *,
                    eta: float = 0.1, reference_budget: int | None = None) -> list[RiskRecord]:
    """Run ``algo`` for ``k_steps`` on the empirical risk and record each iterate."""
    if k_steps < 1:
        raise ValueError("k_steps must be >= 1")
    budget = reference_budget or max(10 * k_steps, 200)
    f_ref, _ = erm_reference(instance, budget)
    pts = []
    tr = run_algorithm(algo, instance.domain(), instance.y, k_steps, start=_start_atom(instance),
                       callback=lambda t, x: pts.append(x.copy()))
    log_m = math.log(instance.m)
    out = []
    for t, x in enumerate(pts):
        k = t + 1  # the t-th iterate mixes at most t + 1 atoms
        out.append(RiskRecord(k, float(tr.f[t]) - f_ref, instance.excess_risk(x), k * log_m / instance.n,
                              math.sqrt(k * log_m) * math.log(1.0 / eta) / instance.n, int(tr.sparsity[t])))
    return out


def fit_envelope_constant(records: list[RiskRecord], quantile: float = 0.9) -> float:
    """Empirical ``C`` with ``E <= C (opt_err + sparse_term + tail_term)`` at the given quantile."""
    ratios = [r.excess_risk / (max(r.opt_err, 0.0) + r.sparse_term + r.tail_term) for r in records]
    return float(np.quantile(ratios, quantile))


# -- interior placement --------------------------------------------------------

def interior_radius(instance_or_dict, x, frame=None, kind: str = "gaussian") -> float:
    """Relative-interior radius of ``x`` in the dictionary hull (certified, exact for these hulls).

    A ``cross`` hull is an l1 ball in the span of ``frame``; a ``gaussian``
    hull of ``m <= n + 1`` generic atoms is a simplex.
    """
    if isinstance(instance_or_dict, SequenceModelInstance):
        inst = instance_or_dict
        D, frame, kind = inst.dictionary, inst.frame, inst.kind
    else:
        D = np.asarray(instance_or_dict, dtype=float)
    x = np.asarray(x, dtype=float)
    if kind == "cross":
        z = frame @ x
        return float((1.0 - np.abs(z).sum()) / math.sqrt(frame.shape[0]))
    P = FinitePolytope(D, n_dirs=64)
    return P.relative_interior_radius(x)


def place_interior(D, r: float, rng, frame=None, kind: str = "gaussian") -> np.ndarray:
    """A point at relative-interior radius exactly ``r``, on a segment from the centre to the boundary.

    Raises ``ValueError`` naming the achievable radius when ``r`` is too large.
    """
    rng = as_rng(rng)
    D = np.asarray(D, dtype=float)
    m = D.shape[0]
    if kind == "cross":
        h = frame.shape[0]
        r_max = 1.0 / math.sqrt(h)
        if r > r_max:
            raise ValueError(f"interior radius {r:.6g} not realizable; achievable radius is {r_max:.6g}")
        w = rng.dirichlet(np.ones(h)) * rng.choice([-1.0, 1.0], size=h)
        # radius (1 - t |w|_1)/sqrt(h) with |w|_1 = 1
        t = 1.0 - r * math.sqrt(h)
        return (t * w) @ frame
    P = FinitePolytope(D, n_dirs=64)
    if not P.is_simplex:
        raise ValueError("gaussian placement needs an affinely independent dictionary")
    lam0 = np.full(m, 1.0 / m)
    _, heights = P.barycentric(lam0 @ D)
    j = int(np.argmin(heights))
    r_max = heights[j] / m
    if r > r_max:
        raise ValueError(f"interior radius {r:.6g} not realizable; achievable radius is {r_max:.6g}")
    # move away from vertex j: lam_j = (1 - t)/m decreases linearly and binds first
    t = 1.0 - r * m / heights[j]
    q = np.full(m, 1.0 / (m - 1))
    q[j] = 0.0
    lam = (1.0 - t) * lam0 + t * q
    return lam @ D


def fast_rate_steps(n: int, alpha: float, c: float) -> int:
    """Early-stopping time ``ceil(32 alpha n^(1-alpha) log(n) / c)``."""
    return math.ceil(32.0 * alpha * n ** (1.0 - alpha) * math.log(n) / c)


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass
class StudyTable:
    rows: list = field(default_factory=list)
    slope: float = math.nan
    summary: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def _check_grid(n_grid):
    n_grid = [int(n) for n in n_grid]
    if not n_grid or n_grid != sorted(n_grid):
        raise ValueError("n_grid must be non-empty and ascending")
    return n_grid


def fast_rate_trial(n: int, trial: int, *, alpha: float, c: float, m: int, eta: float = 0.1, seed: int = 0,
                    kind: str = "cross", algo: str = "vanilla", persistence: bool = True) -> dict:
    """One seed of the interior study: ``mu_bar = mu_star`` at radius ``c n^((alpha-1)/2)``,
    Frank-Wolfe stopped at ``fast_rate_steps(n)``."""
    r = c * n ** ((alpha - 1.0) / 2.0)
    k = fast_rate_steps(n, alpha, c)
    rng = make_rng(seed, trial, f"fastrate/{n}")
    D, frame = make_dictionary(m, n, rng, kind)
    mu = place_interior(D, r, rng, frame, kind)
    inst = make_instance(n, m, seed, mu_star=mu, dictionary=D, mu_bar=mu, kind=kind, frame=frame,
                         trial_index=trial)
    # the gap tolerance only ends runs that have converged to machine precision
    tr = run_algorithm(algo, inst.domain(), inst.y, k, start=_start_atom(inst), gap_tol=1e-14)
    row = {"n": n, "m": m, "alpha": alpha, "k": k, "seed": trial, "opt_err": math.nan,
           "excess_risk": inst.excess_risk(tr.final.point), "bound_value": _fast_rate_bound(n, m, alpha, eta),
           "radius": r, "erm_radius": math.nan}
    if persistence:
        f_ref, erm = erm_reference(inst, 2000)
        row["erm_radius"] = interior_radius(inst, erm)
        row["opt_err"] = max(float(tr.f[-1]) - f_ref, 0.0)
    return row


def exterior_trial(n: int, trial: int, *, m: int, seed: int = 0, kind: str = "cross", offset: float = 0.5,
                   algo: str = "vanilla", k: int | None = None) -> dict:
    """One seed of the exterior study.

    ``mu_bar`` is a random point in the relative interior of a facet and
    ``mu_star = mu_bar + offset * nu`` along the facet's outward normal, so
    ``mu_bar`` is its projection. Frank-Wolfe is stopped at ``exterior_steps(n, m)``.
    """
    k = k or exterior_steps(n, m)
    rng = make_rng(seed, trial, f"exterior/{n}")
    D, frame = make_dictionary(m, n, rng, kind)
    mu_bar, nu = _facet_point(D, frame, kind, rng)
    inst = make_instance(n, m, seed, mu_star=mu_bar + offset * nu, dictionary=D, mu_bar=mu_bar, kind=kind,
                         frame=frame, trial_index=trial)
    tr = run_algorithm(algo, inst.domain(), inst.y, k, start=_start_atom(inst))
    return {"n": n, "m": m, "alpha": 0.0, "k": k, "seed": trial, "opt_err": math.nan,
            "excess_risk": inst.excess_risk(tr.final.point), "bound_value": 4.0 * math.sqrt(math.log(m) / n)}


def summarize_rate_rows(rows) -> StudyTable:
    """Median excess risk per ``n`` and the log-log slope through the medians."""
    table = StudyTable(rows=list(rows))
    ns = sorted({r["n"] for r in table.rows})
    meds = []
    for n in ns:
        group = [r for r in table.rows if r["n"] == n]
        med = float(np.median([r["excess_risk"] for r in group]))
        meds.append(med)
        entry = {"n": n, "k": group[0]["k"], "median_excess_risk": med}
        if "radius" in group[0]:
            entry["radius"] = group[0]["radius"]
            rad = [r["erm_radius"] for r in group if not math.isnan(r["erm_radius"])]
            entry["persistence_fraction"] = (float(np.mean([x >= 0.5 * group[0]["radius"] for x in rad]))
                                             if rad else math.nan)
        table.summary.append(entry)
    table.slope = fit_loglog_slope(ns, meds) if len(ns) > 1 else math.nan
    return table


def interior_fast_rate_study(alpha: float, c: float, n_grid, m: int, eta: float = 0.1, seed: int = 0,
                             *, trials: int = 100, kind: str = "cross", algo: str = "vanilla",
                             persistence: bool = True) -> StudyTable:
    """Interior study over ``n_grid``: per-trial rows, per-n medians and the fitted slope.

    With ``persistence`` each ERM's radius is measured against half the
    constructed radius.
    """
    if not 0.5 < alpha <= 1.0:
        raise ValueError("alpha must lie in (1/2, 1]")
    if c <= 0:
        raise ValueError("c must be positive")
    rows = [fast_rate_trial(n, t, alpha=alpha, c=c, m=m, eta=eta, seed=seed, kind=kind, algo=algo,
                            persistence=persistence)
            for n in _check_grid(n_grid) for t in range(trials)]
    return summarize_rate_rows(rows)


def _fast_rate_bound(n, m, alpha, eta):
    # the polylog factor is taken as log(m) log(n) log(1/eta); only its order matters
    return math.log(m) * math.log(n) * max(math.log(1.0 / eta), 1.0) / n ** alpha


def exterior_steps(n: int, m: int) -> int:
    """``ceil(sqrt(n / log m))``, which balances ``1/k`` against ``k log(m)/n``."""
    return math.ceil(math.sqrt(n / math.log(m)))


def exterior_rate_study(n_grid, m: int, seed: int = 0, *, trials: int = 100, kind: str = "cross",
                        offset: float = 0.5, algo: str = "vanilla") -> StudyTable:
    """Exterior study over ``n_grid``; see :func:`exterior_trial`."""
    rows = [exterior_trial(n, t, m=m, seed=seed, kind=kind, offset=offset, algo=algo)
            for n in _check_grid(n_grid) for t in range(trials)]
    return summarize_rate_rows(rows)


def _facet_point(D, frame, kind, rng):
    """A point in the relative interior of a facet and the facet's unit outward normal."""
    if kind == "cross":
        h = frame.shape[0]
        s = rng.choice([-1.0, 1.0], size=h)
        w = rng.dirichlet(np.ones(h)) * s
        return w @ frame, (s / math.sqrt(h)) @ frame
    m = D.shape[0]
    P = FinitePolytope(D, n_dirs=64)
    if not P.is_simplex:
        raise ValueError("gaussian facets need an affinely independent dictionary")
    j = int(rng.integers(m))
    lam = rng.dirichlet(np.ones(m - 1))
    others = np.delete(D, j, axis=0)
    x = lam @ others
    # outward normal: component of (x - D[j]) orthogonal to the facet, inside the affine hull
    B = (others[1:] - others[0]).T
    v = x - D[j]
    if B.shape[1]:
        q, _ = np.linalg.qr(B)
        v = v - q @ (q.T @ v)
    return x, v / np.linalg.norm(v)


# -- linear rate ----------------------------------------------------------------

def interior_targets(domain, r: float, count: int, rng) -> list[np.ndarray]:
    """Random targets with certified relative-interior radius at least ``r``.

    Each is found by bisection on the segment from the domain's centre towards
    a random point; ``ValueError`` if the centre itself is not deep enough.
    """
    from .geometry import random_point

    rng = as_rng(rng)
    centre = _centre(domain)
    r0 = domain.relative_interior_radius(centre, rng=rng)
    if r > r0 + 1e-15:
        raise ValueError(f"certified radius {r:.6g} not realizable; the largest is {r0:.6g}")
    out = []
    for _ in range(count):
        q = random_point(domain, rng)
        lo, hi = 0.0, 1.0
        if _radius(domain, centre + (q - centre), rng) >= r:
            lo = 1.0
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _radius(domain, centre + mid * (q - centre), rng) >= r:
                    lo = mid
                else:
                    hi = mid
        out.append(centre + lo * (q - centre))
    return out


def _radius(domain, x, rng):
    try:
        return domain.relative_interior_radius(x, rng=rng)
    except ValueError:
        return -1.0


def _centre(domain) -> np.ndarray:
    if hasattr(domain, "vertex_array"):
        return domain.vertex_array.mean(axis=0)
    if isinstance(domain, Simplex):
        return np.full(domain.dim, 1.0 / domain.dim)
    return np.zeros(domain.dim)


def linear_rate_trial(domain, r: float, k_max: int, seed: int, target_index: int = 0) -> dict:
    """One target at certified radius ``>= r`` and its line-search run against ``(1 - r^2/16)^k``."""
    base = 1.0 - r * r / 16.0
    rng = make_rng(seed, target_index, f"linrate/{r!r}")
    p = interior_targets(domain, r, 1, rng)[0]
    tr = run_algorithm("vanilla", domain, p, k_max, rng=rng)
    eps = tr.f  # the target is inside, so f* = 0
    k = np.arange(len(eps))
    env = eps[0] * base ** k
    viol = int((eps > env * (1.0 + 1e-12)).sum())
    pos = eps[1:] > 0
    rates = (eps[1:][pos] / eps[0]) ** (1.0 / k[1:][pos]) if eps[0] > 0 else np.empty(0)
    return {"r": r, "seed": seed, "k_max": k_max, "steps_run": int(len(eps) - 1), "eps0": float(eps[0]),
            "contraction": float(rates.max()) if rates.size else 0.0, "envelope_base": base,
            "violations": viol}


def linear_rate_check(domain, r_grid, k_max: int, seeds) -> StudyTable:
    """Confront line-search Frank-Wolfe with the ``(1 - r^2/16)^k`` envelope.

    For each ``r`` and seed a target at certified radius ``>= r`` is drawn and
    the run is checked at every ``k <= k_max``. Rows carry the measured
    contraction factor ``max_k (eps_k/eps_0)^(1/k)`` and the violation count.
    """
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    table = StudyTable(rows=[linear_rate_trial(domain, r, k_max, s) for r in r_grid for s in seeds])
    table.extra["violations"] = sum(row["violations"] for row in table.rows)
    return table
