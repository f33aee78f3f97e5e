"""Conditional-gradient solvers for ``f(x) = |x - p|^2`` over a :class:`~sparsefw.geometry.Domain`.

All three variants keep the iterate as an explicit convex combination of atoms,
so the number of atoms (the sparsity) is measured exactly rather than inferred.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Atom, Domain, Membership
from .rng import as_rng

__all__ = [
    "PRUNE_TOL", "QuadraticObjective", "SparseIterate", "RunTrace",
    "project_simplex", "default_start",
    "fw_vanilla", "fw_away", "fw_fully_corrective", "run_algorithm", "ALGORITHMS",
    "SparsityEstimate", "min_sparsity_to_tolerance", "reference_optimum",
]

PRUNE_TOL = 1e-12
TRACE_HEADER = ("iter", "f", "gap", "sparsity", "gamma", "step_kind")


@dataclass(frozen=True)
class QuadraticObjective:
    """``x -> |x - target|^2``; 2-smooth and 2-strongly convex."""

    target: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float).ravel())

    def value(self, x) -> float:
        r = np.asarray(x) - self.target
        return float(r @ r)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * (np.asarray(x) - self.target)


def _objective(obj) -> QuadraticObjective:
    return obj if isinstance(obj, QuadraticObjective) else QuadraticObjective(obj)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


class _ActiveSet:
    """Atoms, their dense rows and their weights; the working state of a run."""

    def __init__(self, dim: int):
        self.dim = dim
        self.atoms: list[Atom] = []
        self.keys: dict = {}
        self.rows = np.empty((8, dim))
        self.weights = np.empty(0)

    @property
    def size(self) -> int:
        return len(self.atoms)

    def matrix(self) -> np.ndarray:
        return self.rows[: self.size]

    def index_of(self, atom: Atom) -> int:
        key = atom.key
        j = self.keys.get(key)
        if j is not None:
            return j
        j = self.size
        if j == self.rows.shape[0]:
            grown = np.empty((2 * j, self.dim))
            grown[:j] = self.rows
            self.rows = grown
        self.rows[j] = atom.dense()
        self.atoms.append(atom)
        self.keys[key] = j
        self.weights = np.append(self.weights, 0.0)
        return j

    def point(self) -> np.ndarray:
        return self.weights @ self.matrix()

    def prune(self, tol: float):
        keep = self.weights > tol
        if keep.all():
            return
        idx = np.flatnonzero(keep)
        self.atoms = [self.atoms[i] for i in idx]
        self.rows[: idx.size] = self.rows[idx]
        self.weights = self.weights[idx] / self.weights[idx].sum()
        self.keys = {a.key: i for i, a in enumerate(self.atoms)}

    def snapshot(self) -> "SparseIterate":
        return SparseIterate(tuple(self.atoms), self.weights.copy(), self.point())


@dataclass(frozen=True)
class SparseIterate:
    atoms: tuple
    weights: np.ndarray
    point: np.ndarray

    def sparsity(self, prune_tol: float = PRUNE_TOL) -> int:
        return int((self.weights > prune_tol).sum())

    def check(self, tol: float = 1e-12) -> None:
        if len(self.atoms) != self.weights.shape[0]:
            raise AssertionError("atom/weight length mismatch")
        if (self.weights < 0).any() or abs(self.weights.sum() - 1.0) > tol:
            raise AssertionError("weights leave the probability simplex")
        dense = sum(w * a.dense() for w, a in zip(self.weights, self.atoms))
        if np.abs(dense - self.point).max(initial=0.0) > 1e-10:
            raise AssertionError("cached point disagrees with the convex combination")


@dataclass(frozen=True)
class RunTrace:
    """Per-iterate records; row ``t`` describes ``x_t`` and the step taken from it."""

    iters: np.ndarray
    f: np.ndarray
    gap: np.ndarray
    sparsity: np.ndarray
    gamma: np.ndarray
    step_kind: tuple
    status: str
    final: SparseIterate
    lmo_calls: int
    inexact_lmo: int = 0
    algorithm: str = ""

    def __len__(self):
        return len(self.iters)

    @property
    def f_final(self) -> float:
        return float(self.f[-1])

    def csv_rows(self):
        for t, f, g, s, gm, k in zip(self.iters, self.f, self.gap, self.sparsity, self.gamma, self.step_kind):
            yield [str(int(t)), f"{f:.17g}", f"{g:.17g}", str(int(s)), f"{gm:.17g}", k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(TRACE_HEADER)
        w.writerows(self.csv_rows())
        return buf.getvalue()


@dataclass
class _Recorder:
    iters: list = field(default_factory=list)
    f: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    sparsity: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    kind: list = field(default_factory=list)
    lmo_calls: int = 0
    inexact: int = 0

    def add(self, t, f, gap, sparsity, gamma, kind):
        self.iters.append(t)
        self.f.append(f)
        self.gap.append(gap)
        self.sparsity.append(sparsity)
        self.gamma.append(gamma)
        self.kind.append(kind)

    def finish(self, status, act: _ActiveSet, algorithm) -> RunTrace:
        return RunTrace(
            np.asarray(self.iters, dtype=int), np.asarray(self.f), np.asarray(self.gap),
            np.asarray(self.sparsity, dtype=int), np.asarray(self.gamma), tuple(self.kind),
            status, act.snapshot(), self.lmo_calls, self.inexact, algorithm,
        )


def default_start(domain: Domain, target, rng=None) -> Atom:
    """The atom most aligned with the target: ``lmo(-target)``."""
    return domain.lmo(-np.asarray(target, dtype=float), rng=rng)


class _Oracle:
    def __init__(self, domain, rng, power_iters, power_tol, rec):
        self.domain, self.rng = domain, rng
        self.power_iters, self.power_tol = power_iters, power_tol
        self.rec = rec

    def __call__(self, g) -> Atom:
        self.rec.lmo_calls += 1
        atom = self.domain.lmo(g, rng=self.rng, power_iters=self.power_iters, power_tol=self.power_tol)
        if getattr(atom, "inexact", False):
            self.rec.inexact += 1
        return atom


def _setup(domain, obj, start, rng, power_iters, power_tol):
    obj = _objective(obj)
    domain.check_point(obj.target)
    rng = as_rng(rng)
    rec = _Recorder()
    oracle = _Oracle(domain, rng, power_iters, power_tol, rec)
    act = _ActiveSet(domain.dim)
    if start is None:
        rec.lmo_calls += 1
        start = default_start(domain, obj.target, rng)
    j = act.index_of(start)
    act.weights[j] = 1.0
    return obj, rec, oracle, act


def _line_search(g, d, gamma_max):
    dd = float(d @ d)
    if dd == 0.0:
        return 0.0
    return min(max(-float(g @ d) / (2.0 * dd), 0.0), gamma_max)


def _stop_row(rec, t, f, gap, act, steps, f_tol, gap_tol):
    """Record a terminal row when the budget or a tolerance is reached."""
    reached = (f_tol is not None and f <= f_tol) or (gap_tol is not None and gap <= gap_tol)
    if t == steps or reached:
        rec.add(t, f, gap, act.size, math.nan, "")
        return "tolerance" if reached else "max_steps"
    return None


def fw_vanilla(domain: Domain, obj, steps: int, step_rule: str = "line_search", start: Atom | None = None,
               *, rng=None, f_tol: float | None = None, gap_tol: float | None = None, callback=None,
               power_iters: int = 500, power_tol: float = 1e-9,
               prune_tol: float = PRUNE_TOL) -> RunTrace:
    """Classic Frank-Wolfe with the harmonic ``2/(t+2)`` rule or exact line search."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if step_rule not in ("harmonic", "line_search"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    obj, rec, oracle, act = _setup(domain, obj, start, rng, power_iters, power_tol)
    p = obj.target
    status = "max_steps"
    for t in range(steps + 1):
        x = act.point()
        if callback is not None:
            callback(t, x)
        f = obj.value(x)
        g = 2.0 * (x - p)
        atom = oracle(g)
        d = atom.dense() - x
        gap = -float(g @ d)
        status = _stop_row(rec, t, f, gap, act, steps, f_tol, gap_tol)
        if status:
            break
        if gap <= 0.0 or not np.any(d):
            rec.add(t, f, max(gap, 0.0), act.size, 0.0, "")
            status = "optimal"
            break
        gamma = 2.0 / (t + 2.0) if step_rule == "harmonic" else _line_search(g, d, 1.0)
        rec.add(t, f, gap, act.size, gamma, "fw")
        j = act.index_of(atom)
        act.weights *= 1.0 - gamma
        act.weights[j] += gamma
        act.prune(prune_tol)
    return rec.finish(status, act, f"vanilla_{step_rule}")


def fw_away(domain: Domain, obj, steps: int, start: Atom | None = None, *, rng=None,
            f_tol: float | None = None, gap_tol: float | None = None, callback=None,
            power_iters: int = 500, power_tol: float = 1e-9,
            prune_tol: float = PRUNE_TOL) -> RunTrace:
    """Away-step Frank-Wolfe with exact line search over the maintained active set."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    obj, rec, oracle, act = _setup(domain, obj, start, rng, power_iters, power_tol)
    p = obj.target
    status = "max_steps"
    for t in range(steps + 1):
        x = act.point()
        if callback is not None:
            callback(t, x)
        f = obj.value(x)
        g = 2.0 * (x - p)
        atom = oracle(g)
        d_fw = atom.dense() - x
        gap = -float(g @ d_fw)
        status = _stop_row(rec, t, f, gap, act, steps, f_tol, gap_tol)
        if status:
            break
        if gap <= 0.0 or not np.any(d_fw):
            rec.add(t, f, max(gap, 0.0), act.size, 0.0, "")
            status = "optimal"
            break
        scores = act.matrix() @ g
        a = int(np.argmax(scores))
        gap_away = float(scores[a] - g @ x)
        if act.size > 1 and gap_away > gap:
            alpha = act.weights[a]
            d = x - act.rows[a]
            gamma_max = alpha / (1.0 - alpha)
            gamma = _line_search(g, d, gamma_max)
            kind = "drop" if gamma >= gamma_max else "away"
            rec.add(t, f, gap, act.size, gamma, kind)
            act.weights *= 1.0 + gamma
            act.weights[a] -= gamma
            if kind == "drop":
                act.weights[a] = 0.0
        else:
            gamma = _line_search(g, d_fw, 1.0)
            rec.add(t, f, gap, act.size, gamma, "fw")
            j = act.index_of(atom)
            act.weights *= 1.0 - gamma
            act.weights[j] += gamma
        act.prune(prune_tol)
    return rec.finish(status, act, "away")


def _correct_weights(R: np.ndarray, p: np.ndarray, lam: np.ndarray, iters: int, tol: float) -> np.ndarray:
    """Projected gradient on ``lam -> |R^T lam - p|^2`` over the weight simplex."""
    G = R @ R.T
    b = R @ p
    L = 2.0 * float(np.linalg.eigvalsh(G)[-1])
    if L <= 0.0:
        return lam
    for _ in range(iters):
        grad = 2.0 * (G @ lam - b)
        # Frank-Wolfe gap of the weight problem certifies inner convergence
        if float(grad @ lam - grad.min()) <= tol:
            break
        lam = project_simplex(lam - grad / L)
    return lam


def fw_fully_corrective(domain: Domain, obj, steps: int, inner_iters: int = 200, start: Atom | None = None,
                        *, rng=None, f_tol: float | None = None, gap_tol: float | None = None, callback=None,
                        inner_tol: float = 1e-15,
                        power_iters: int = 500, power_tol: float = 1e-9,
                        prune_tol: float = PRUNE_TOL) -> RunTrace:
    """Add the oracle atom, then re-optimize all weights by projected gradient."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if inner_iters < 1:
        raise ValueError("inner_iters must be >= 1")
    obj, rec, oracle, act = _setup(domain, obj, start, rng, power_iters, power_tol)
    p = obj.target
    status = "max_steps"
    for t in range(steps + 1):
        x = act.point()
        if callback is not None:
            callback(t, x)
        f = obj.value(x)
        g = 2.0 * (x - p)
        atom = oracle(g)
        d = atom.dense() - x
        gap = -float(g @ d)
        status = _stop_row(rec, t, f, gap, act, steps, f_tol, gap_tol)
        if status:
            break
        if gap <= 0.0 or not np.any(d):
            rec.add(t, f, max(gap, 0.0), act.size, 0.0, "")
            status = "optimal"
            break
        gamma = _line_search(g, d, 1.0)
        rec.add(t, f, gap, act.size, gamma, "corrective")
        j = act.index_of(atom)
        # warm start from the line-search step so the objective never increases
        act.weights *= 1.0 - gamma
        act.weights[j] += gamma
        act.weights = _correct_weights(act.matrix(), p, act.weights, inner_iters, inner_tol)
        act.prune(prune_tol)
    return rec.finish(status, act, "fully_corrective")


ALGORITHMS = ("vanilla", "vanilla_harmonic", "away", "fully_corrective")


def run_algorithm(algo: str, domain: Domain, obj, steps: int, **kw) -> RunTrace:
    """Dispatch by name; ``vanilla`` means line-search vanilla Frank-Wolfe."""
    if algo in ("vanilla", "vanilla_line_search"):
        return fw_vanilla(domain, obj, steps, "line_search", **kw)
    if algo == "vanilla_harmonic":
        return fw_vanilla(domain, obj, steps, "harmonic", **kw)
    if algo == "away":
        return fw_away(domain, obj, steps, **kw)
    if algo == "fully_corrective":
        return fw_fully_corrective(domain, obj, steps, **kw)
    raise ValueError(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")


@dataclass(frozen=True)
class SparsityEstimate:
    """Empirical upper estimate of the compressibility on a sample of targets."""

    k: int
    saturated: bool
    per_target: np.ndarray
    eps: float
    algo: str


def min_sparsity_to_tolerance(domain: Domain, targets, eps: float, algo: str = "vanilla",
                              max_steps: int = 1000, *, rng=None, **kw) -> SparsityEstimate:
    """Atoms needed to get within ``eps`` of every target; ``algo='best'`` takes the
    per-target minimum over the three variants."""
    targets = [np.asarray(p, dtype=float) for p in targets]
    if not targets:
        raise ValueError("targets must be non-empty")
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = as_rng(rng)
    algos = ("vanilla", "away", "fully_corrective") if algo == "best" else (algo,)
    ks = np.empty(len(targets), dtype=int)
    saturated = False
    for i, p in enumerate(targets):
        best = None
        for name in algos:
            tr = run_algorithm(name, domain, p, max_steps, rng=rng, f_tol=eps * eps, **kw)
            if tr.f_final <= eps * eps:
                k = tr.final.sparsity()
            else:
                k = max_steps
            best = k if best is None else min(best, k)
        if best >= max_steps:
            saturated = True
        ks[i] = best
    return SparsityEstimate(int(ks.max()), saturated, ks, eps, algo)


def reference_optimum(domain: Domain, target, budget: int = 1000, *, rng=None) -> float:
    """``f*``: zero when the target is in the domain, else a long fully-corrective run."""
    target = np.asarray(target, dtype=float)
    if domain.membership(target, 1e-12) is not Membership.OUTSIDE:
        return 0.0
    tr = fw_fully_corrective(domain, target, budget, inner_iters=1000, rng=rng)
    return float(tr.f.min())
