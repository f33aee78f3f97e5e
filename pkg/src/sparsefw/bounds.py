"""Metric-entropy lower bounds on the sparsity any conditional-gradient method needs.

Every evaluator returns a :class:`BoundReport` that carries the objective
tolerance it bounds, so an empirical comparison cannot mix the ``eps**2/4``
convention of the general bounds with the ``delta/d`` style of the presets.
Logarithms are natural and every volume is handled through ``lgamma``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BoundReport", "Comparison",
    "khull_entropy_bound", "lower_bound_prop31", "lower_bound_volume", "lower_bound_infinite",
    "log_unit_ball_volume", "log_volume", "log_volume_ratio", "volume_ratio", "varv_root",
    "covering_lower_volumetric", "l1_log_covering",
    "lower_bound_l1", "lower_bound_l1_general", "lower_bound_cube", "lower_bound_cube_general",
    "nuclear_inputs", "lower_bound_nuclear", "lower_bound_nuclear_delta", "lower_bound_nuclear_general",
    "lower_bound_simplex", "lower_bound_polytope",
    "empirical_vs_bound", "greedy_simplex_l1_cover",
]

FORMULAS = ("prop31", "thm32_volume", "thm36_infinite", "ex_l1", "ex_cube", "ex_nuclear", "thm34_randpoly")


@dataclass(frozen=True)
class BoundReport:
    """A lower bound ``S(P, f_tol) >= value`` together with everything it was computed from.

    ``eps`` is the covering scale of the formula, ``f_tol`` the objective
    tolerance (squared distance) the bound refers to in the domain's native
    scaling. ``normalization`` is the radius of the Euclidean ball that was
    scaled to the unit ball before the formula was applied.
    """

    formula_id: str
    value: float
    eps: float
    f_tol: float
    dim: int | None = None
    n_vertices: float | None = None
    inputs: dict = field(default_factory=dict)
    flags: tuple = ()
    tolerance_note: str = ""
    normalization: float = 1.0

    @property
    def dist_tol(self) -> float:
        """Distance tolerance matching ``f_tol`` for targets inside the domain."""
        return math.sqrt(self.f_tol)

    @property
    def floor(self) -> int:
        return int(math.floor(self.value + 1e-12))

    def flagged(self, name: str) -> bool:
        return name in self.flags

    def row(self) -> dict:
        return {
            "formula": self.formula_id, "d": "" if self.dim is None else self.dim,
            "n": "" if self.n_vertices is None else self.n_vertices,
            "eps": self.eps, "value": self.value, "flags": ";".join(self.flags),
        }


def _report(formula_id, raw, eps, f_tol, *, dim=None, n_vertices=None, inputs=None, extra_flags=(),
            note="", normalization=1.0) -> BoundReport:
    if formula_id not in FORMULAS:
        raise ValueError(f"unknown formula id {formula_id!r}")
    flags = list(extra_flags)
    value = float(raw)
    if not math.isfinite(value):
        raise ArithmeticError(f"{formula_id}: non-finite bound {value}")
    if value <= 0.0:
        if value < 0.0:
            flags.append("vacuous")
        value = 0.0
    if dim is not None and value > dim + 1:
        flags.append("caratheodory_capped")
    return BoundReport(formula_id, value, float(eps), float(f_tol), dim, n_vertices,
                       dict(inputs or {}), tuple(flags), note, float(normalization))


def _check_eps(eps):
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"eps must lie in (0, 1], got {eps}")


def khull_entropy_bound(k: int, logN_half: float, eps: float) -> float:
    """Upper bound ``k (log N(eps/2) + log(6/eps))`` on the entropy of the k-hull."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if logN_half < 0:
        raise ValueError("logN_half must be nonnegative")
    _check_eps(eps)
    return k * (logN_half + math.log(6.0 / eps))


def lower_bound_prop31(logN_P: float, n_vertices: float, eps: float, *, dim: int | None = None,
                       radius: float = 1.0, formula_id: str = "prop31", inputs=None,
                       note: str = "") -> BoundReport:
    """Finite-vertex bound ``log N(P, eps) / (3 + log n + log(1/eps))``.

    ``logN_P`` is the entropy at scale ``eps`` of ``P / radius``, which lies in
    the unit ball; the report's ``f_tol`` is ``(radius * eps)**2 / 4``.
    """
    _check_eps(eps)
    if n_vertices < 1:
        raise ValueError("n_vertices must be >= 1")
    if logN_P < 0:
        raise ValueError("logN_P must be nonnegative")
    value = logN_P / (3.0 + math.log(n_vertices) + math.log(1.0 / eps))
    inp = {"logN_P": logN_P, "n_vertices": n_vertices, "eps": eps}
    inp.update(inputs or {})
    return _report(formula_id, value, eps, (radius * eps) ** 2 / 4.0, dim=dim, n_vertices=n_vertices,
                   inputs=inp, note=note or "bounds S(P, eps^2/4)", normalization=radius)


def lower_bound_volume(varv_root: float, d: int, n_vertices: float, eps: float, *, radius: float = 1.0,
                       formula_id: str = "thm32_volume", inputs=None, note: str = "") -> BoundReport:
    """Volume-ratio bound ``d (log varv_root + log(1/eps)) / (3 + log n + log(1/eps))``.

    ``varv_root`` is ``varpi(P / radius) ** (1/d)``; a negative numerator
    returns zero with the ``vacuous`` flag.
    """
    if not (0.0 < varv_root <= 1.0 + 1e-12):
        raise ValueError(f"varv_root must lie in (0, 1], got {varv_root}")
    _check_eps(eps)
    if n_vertices < 1:
        raise ValueError("n_vertices must be >= 1")
    value = d * (math.log(varv_root) + math.log(1.0 / eps)) / (3.0 + math.log(n_vertices) + math.log(1.0 / eps))
    inp = {"varv_root": varv_root, "d": d, "n_vertices": n_vertices, "eps": eps}
    inp.update(inputs or {})
    return _report(formula_id, value, eps, (radius * eps) ** 2 / 4.0, dim=d, n_vertices=n_vertices,
                   inputs=inp, note=note or "bounds S(P, eps^2/4)", normalization=radius)


def lower_bound_infinite(logN_conv: float, logN_V_half: float, eps: float, *, dim: int | None = None,
                         formula_id: str = "thm36_infinite", inputs=None, note: str = "") -> BoundReport:
    """Bound for hulls of infinite sets: ``log N(conv V, eps) / (4 + log N(V, eps/2) + log(1/eps))``."""
    _check_eps(eps)
    value = logN_conv / (4.0 + logN_V_half + math.log(1.0 / eps))
    inp = {"logN_conv": logN_conv, "logN_V_half": logN_V_half, "eps": eps}
    inp.update(inputs or {})
    return _report(formula_id, value, eps, eps * eps / 4.0, dim=dim, n_vertices=math.inf,
                   inputs=inp, note=note or "bounds S(V, eps^2/4)")


# -- volumes -----------------------------------------------------------------

def log_unit_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - math.lgamma(1.0 + 0.5 * d)


_VOLUME_KINDS = ("l1", "cube", "simplex", "ball")


def log_volume(kind: str, d: int) -> tuple[float, int]:
    """Log volume of a shipped domain and the dimension it is measured in.

    The simplex is measured in its own ``d - 1``-dimensional affine hull.
    """
    if kind == "l1":
        return d * math.log(2.0) - math.lgamma(d + 1.0), d
    if kind == "cube":
        return d * (math.log(2.0) - 0.5 * math.log(d)), d
    if kind == "simplex":
        if d < 2:
            raise ValueError("simplex volume needs d >= 2")
        return 0.5 * math.log(d) - math.lgamma(d), d - 1
    if kind == "ball":
        return log_unit_ball_volume(d), d
    raise ValueError(f"unknown volume kind {kind!r}; choose from {_VOLUME_KINDS}")


def log_volume_ratio(kind_or_vol, d: int, *, log: bool = False) -> float:
    """``log varpi``; ``kind_or_vol`` is a kind name or a (log-)volume in dimension ``d``."""
    if isinstance(kind_or_vol, str):
        lv, dd = log_volume(kind_or_vol, d)
        return lv - log_unit_ball_volume(dd)
    if log:
        lv = float(kind_or_vol)
    else:
        if kind_or_vol <= 0:
            raise ValueError("volume must be positive")
        lv = math.log(kind_or_vol)
    return lv - log_unit_ball_volume(d)


def volume_ratio(kind_or_vol, d: int) -> float:
    """``varpi = vol_d(P) Gamma(1 + d/2) / pi**(d/2)``."""
    return math.exp(log_volume_ratio(kind_or_vol, d))


def varv_root(kind: str, d: int) -> float:
    """``varpi ** (1/dim)`` for a shipped domain, in the dimension of its affine hull."""
    _, dd = log_volume(kind, d)
    return math.exp(log_volume_ratio(kind, d) / dd)


def covering_lower_volumetric(log_vol_L: float, d: int, eps: float, log_vol_unitball: float) -> float:
    """Volume lower bound on ``log N(L, eps)`` with respect to the norm of the unit ball ``K``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return log_vol_L - d * math.log(eps) - log_vol_unitball


def l1_log_covering(d: int, eps: float) -> float:
    """``d log(1/(eps sqrt d))``: the entropy of the l1 ball via its inscribed ball."""
    return d * math.log(1.0 / (eps * math.sqrt(d)))


# -- presets -----------------------------------------------------------------

def _l1_eps(d, delta):
    if delta <= 0:
        raise ValueError("delta must be positive")
    eps = 4.0 * delta / math.sqrt(d)
    _check_eps(eps)
    return eps


_L1_NOTE = ("objective tolerance (4 delta)^2/(4d) = 4 delta^2/d from eps = 4 delta/sqrt(d); "
            "the preset is customarily quoted at delta/d")


def lower_bound_l1(d: int, delta: float) -> BoundReport:
    """Closed form for the l1 ball: ``d log(1/(4 delta)) / (3 + 1.5 log d + log(1/(2 delta)))``."""
    eps = _l1_eps(d, delta)
    value = d * math.log(1.0 / (4.0 * delta)) / (3.0 + 1.5 * math.log(d) + math.log(1.0 / (2.0 * delta)))
    return _report("ex_l1", value, eps, eps * eps / 4.0, dim=d, n_vertices=2 * d,
                   inputs={"d": d, "delta": delta, "stated_f_tol": delta / d}, note=_L1_NOTE)


def lower_bound_l1_general(d: int, delta: float) -> BoundReport:
    """The same bound through the finite-vertex formula and the inscribed-ball entropy."""
    eps = _l1_eps(d, delta)
    logN = max(l1_log_covering(d, eps), 0.0)
    return lower_bound_prop31(logN, 2 * d, eps, dim=d, inputs={"delta": delta, "stated_f_tol": delta / d},
                              note=_L1_NOTE)


def lower_bound_cube(d: int, eps: float) -> BoundReport:
    """Closed form for ``[-1/sqrt d, 1/sqrt d]^d``: ``d (log(1/eps) - C) / (3 + d log 2 + log(1/eps))``
    with ``C = -log varpi^(1/d)`` computed exactly."""
    _check_eps(eps)
    C = -math.log(varv_root("cube", d))
    value = d * (math.log(1.0 / eps) - C) / (3.0 + d * math.log(2.0) + math.log(1.0 / eps))
    return _report("ex_cube", value, eps, eps * eps / 4.0, dim=d, n_vertices=2.0 ** d,
                   inputs={"d": d, "C": C},
                   note="normalized cube at eps^2/4; the unnormalized cube at d eps^2/4")


def lower_bound_cube_general(d: int, eps: float) -> BoundReport:
    return lower_bound_volume(varv_root("cube", d), d, 2.0 ** d, eps)


def nuclear_inputs(m: int, n: int, eps: float) -> tuple[float, float]:
    """Entropy inputs for the nuclear ball: ``(log N(B, eps), log N(V, eps/2))``."""
    _check_eps(eps)
    k = min(m, n)
    log_conv = m * n * (math.log(1.0 / eps) - 0.5 * math.log(k))
    log_atoms_half = (m + n) * math.log(12.0 / eps)
    return log_conv, log_atoms_half


def lower_bound_nuclear(m: int, n: int, eps: float) -> BoundReport:
    """Closed form ``mn (log(1/eps) - log(m^n)/2) / (6 + m + n + 2 log(1/eps))``."""
    _check_eps(eps)
    k = min(m, n)
    value = m * n * (math.log(1.0 / eps) - 0.5 * math.log(k)) / (6.0 + m + n + 2.0 * math.log(1.0 / eps))
    return _report("ex_nuclear", value, eps, eps * eps / 4.0, dim=m * n, n_vertices=math.inf,
                   inputs={"m": m, "n": n}, note="bounds S(V, eps^2/4); nonvacuous for eps < 1/sqrt(m^n)")


def lower_bound_nuclear_delta(m: int, n: int, delta: float) -> BoundReport:
    """Closed form at ``eps = sqrt(delta/(m^n))``, i.e. objective tolerance ``delta/(4 (m^n))``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return lower_bound_nuclear(m, n, math.sqrt(delta / min(m, n)))


def lower_bound_nuclear_general(m: int, n: int, eps: float) -> BoundReport:
    log_conv, log_half = nuclear_inputs(m, n, eps)
    return lower_bound_infinite(max(log_conv, 0.0), log_half, eps, dim=m * n, inputs={"m": m, "n": n})


def lower_bound_simplex(d: int, eps: float) -> BoundReport:
    """Finite-vertex bound for the probability simplex with its volumetric entropy.

    The simplex is measured in its ``d - 1``-dimensional affine hull; its
    circumradius is below one, so no rescaling is needed.
    """
    _check_eps(eps)
    lv, dd = log_volume("simplex", d)
    logN = max(covering_lower_volumetric(lv, dd, eps, log_unit_ball_volume(dd)), 0.0)
    return lower_bound_prop31(logN, d, eps, dim=dd, inputs={"d": d, "affine_dim": dd})


def lower_bound_polytope(vertices, eps: float) -> BoundReport:
    """Finite-vertex bound for an explicit vertex list via its exact hull volume.

    The vertices are centred at their mean and scaled by the largest centred
    norm so the polytope sits in the unit ball; ``f_tol`` is reported in the
    original scaling.
    """
    from scipy.spatial import ConvexHull

    _check_eps(eps)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    C = V - V.mean(axis=0)
    _, s, vt = np.linalg.svd(C, full_matrices=False)
    rank = int((s > 1e-10 * max(s.max(initial=0.0), 1.0)).sum())
    radius = float(np.linalg.norm(C, axis=1).max(initial=0.0))
    if rank == 0 or radius == 0.0:
        return _report("prop31", 0.0, eps, 0.0, dim=0, n_vertices=len(V), inputs={"rank": rank})
    Y = C @ vt[:rank].T / radius
    if rank == 1:
        log_vol = math.log(Y.max() - Y.min())
    else:
        log_vol = math.log(ConvexHull(Y).volume)
    logN = max(covering_lower_volumetric(log_vol, rank, eps, log_unit_ball_volume(rank)), 0.0)
    return lower_bound_prop31(logN, len(V), eps, dim=rank, radius=radius,
                              inputs={"log_volume": log_vol, "affine_dim": rank})


# -- confronting measurements --------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    status: str
    measured: int
    required: int
    report: BoundReport

    @property
    def consistent(self) -> bool:
        return self.status == "consistent"

    def dump(self) -> str:
        r = self.report
        return (f"{self.status}: measured k={self.measured} vs floor(bound)={self.required} "
                f"[{r.formula_id} d={r.dim} n={r.n_vertices} eps={r.eps:.6g} f_tol={r.f_tol:.6g} "
                f"inputs={r.inputs} flags={r.flags}]")


def empirical_vs_bound(measured_k: int, report: BoundReport, f_tol: float, *, rtol: float = 1e-9) -> Comparison:
    """Check a measured sparsity against a bound computed at the same objective tolerance.

    ``f_tol`` is the squared-distance tolerance the measurement was made at;
    a different convention from the report's raises ``ValueError``.
    """
    if not math.isclose(f_tol, report.f_tol, rel_tol=rtol, abs_tol=0.0):
        raise ValueError(f"tolerance mismatch: measured at f_tol={f_tol!r}, "
                         f"bound refers to f_tol={report.f_tol!r} ({report.tolerance_note})")
    required = report.floor
    status = "consistent" if measured_k >= required else "violation"
    return Comparison(status, int(measured_k), required, report)


def greedy_simplex_l1_cover(t: int, eps: float, grid: int | None = None) -> np.ndarray:
    """A certified ``eps``-cover of the simplex Delta(t) in the l1 norm.

    Centres are picked greedily from the lattice ``{x : N x integer}``; every
    simplex point lies within ``t/N`` of the lattice, so covering the lattice
    at radius ``eps - t/N`` covers the simplex at radius ``eps``.
    """
    if t < 1 or eps <= 0:
        raise ValueError("need t >= 1 and eps > 0")
    N = grid or math.ceil(4 * t / eps)
    slack = t / N
    if slack >= eps:
        raise ValueError("grid too coarse for this eps")
    pts = np.array([c for c in _compositions(N, t)], dtype=float) / N
    radius = eps - slack
    uncovered = np.ones(len(pts), dtype=bool)
    centres = []
    while uncovered.any():
        i = int(np.argmax(uncovered))
        c = pts[i]
        centres.append(c)
        uncovered &= np.abs(pts - c).sum(axis=1) > radius
    return np.array(centres)


def _compositions(N, t):
    # weak compositions of N into t parts via stars and bars
    for bars in itertools.combinations(range(N + t - 1), t - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(N + t - 2 - prev)
        yield parts
