"""Domains, atoms and linear minimization oracles.

Every domain stores points as flat float vectors; matrices in the nuclear-norm
ball are flattened row-major, so the Frobenius inner product is the ordinary
dot product and one code path serves every domain.

Ties in every argmin/argmax resolve to the lowest index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
from scipy.optimize import linprog

from .rng import as_rng

__all__ = [
    "DenseVector", "SignedBasis", "RankOne", "Atom",
    "Membership", "Domain", "Simplex", "L1Ball", "CubeNormalized", "NuclearBall",
    "FinitePolytope", "EuclideanBall",
    "lmo", "membership", "relative_interior_radius", "top_singular_pair",
    "random_point",
]

RANK_ONE_TOL = 1e-10
NUCLEAR_MEMBERSHIP_CAP = 4096


# --------------------------------------------------------------------------- atoms


@dataclass(frozen=True, eq=False)
class DenseVector:
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 1 or not np.all(np.isfinite(coords)):
            raise ValueError("DenseVector needs a finite 1-d coordinate array")

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @property
    def key(self):
        return ("dense", self.coords.tobytes())

    def dense(self) -> np.ndarray:
        return self.coords


@dataclass(frozen=True, eq=False)
class SignedBasis:
    """``sign * e_index`` in ``R^dim`` (0-based index)."""

    index: int
    sign: int
    dim: int

    def __post_init__(self):
        if not 0 <= self.index < self.dim:
            raise ValueError(f"basis index {self.index} outside dimension {self.dim}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def key(self):
        return ("basis", self.index, self.sign)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.index] = self.sign
        return out


@dataclass(frozen=True, eq=False)
class RankOne:
    """``sign * u v^T`` with unit ``u`` and ``v``; ``inexact`` marks an unconverged oracle."""

    u: np.ndarray
    v: np.ndarray
    sign: int = 1
    inexact: bool = False

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if abs(np.linalg.norm(u) - 1.0) > RANK_ONE_TOL or abs(np.linalg.norm(v) - 1.0) > RANK_ONE_TOL:
            raise ValueError("RankOne factors must have unit norm")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def dim(self) -> int:
        return self.u.shape[0] * self.v.shape[0]

    @property
    def key(self):
        return ("rank1", self.u.tobytes(), self.v.tobytes(), self.sign)

    def dense(self) -> np.ndarray:
        return self.sign * np.outer(self.u, self.v).ravel()


Atom = Union[DenseVector, SignedBasis, RankOne]


class Membership(str, Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def _classify(value: float, limit: float, tol: float) -> Membership:
    if value > limit + tol:
        return Membership.OUTSIDE
    if value >= limit - tol:
        return Membership.BOUNDARY
    return Membership.INSIDE


def _neg_sign(x: np.ndarray) -> np.ndarray:
    # -sign(x) with zeros mapped to +1
    return np.where(x > 0, -1.0, 1.0)


# --------------------------------------------------------------------------- power iteration


def top_singular_pair(G: np.ndarray, rng=None, iters: int = 500, tol: float = 1e-9):
    """Leading singular triple of ``G`` by power iteration on ``G^T G``.

    Stops once successive Rayleigh quotients differ by less than ``tol`` times
    the current estimate.  Returns ``(sigma, u, v, converged)``.
    """
    if iters < 1:
        raise ValueError("power_iters must be >= 1")
    rng = as_rng(rng)
    G = np.asarray(G, dtype=float)
    m, n = G.shape
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    GtG = G.T @ G
    lam_prev = float(v @ GtG @ v)
    converged = False
    for _ in range(iters):
        w = GtG @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v lies in the null space: G = 0 or an unlucky start
            converged = not np.any(G)
            break
        v = w / nw
        lam = float(v @ GtG @ v)
        if abs(lam - lam_prev) < tol * max(lam, np.finfo(float).tiny):
            converged = True
            lam_prev = lam
            break
        lam_prev = lam
    Gv = G @ v
    sigma = float(np.linalg.norm(Gv))
    if sigma == 0.0:
        u = np.zeros(m)
        u[0] = 1.0
        v = np.zeros(n)
        v[0] = 1.0
        return 0.0, u, v, converged
    return sigma, Gv / sigma, v, converged


# --------------------------------------------------------------------------- domains


class Domain:
    """Base class; subclasses fill in the oracle and geometry queries."""

    diameter: float
    dim: int

    @property
    def name(self) -> str:
        return type(self).__name__

    @property
    def affine_dim(self) -> int:
        return self.dim

    @property
    def circumradius(self) -> float:
        """Largest Euclidean norm of an extreme point."""
        return 1.0

    def vertices(self) -> np.ndarray | None:
        """All extreme points as rows, or None when they are not enumerable."""
        return None

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"{self.name}: point has length {x.shape[0]}, expected {self.dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point has non-finite entries")
        return x

    def lmo(self, gradient, rng=None, power_iters: int = 500, power_tol: float = 1e-9) -> Atom:
        raise NotImplementedError

    def membership(self, x, tol: float = 1e-9) -> Membership:
        raise NotImplementedError

    def relative_interior_radius(self, x, rng=None) -> float:
        raise NotImplementedError

    def _require_inside(self, x, tol=1e-9):
        if self.membership(x, tol) is Membership.OUTSIDE:
            raise ValueError(f"{self.name}: point lies outside the domain")

    def __repr__(self):
        return f"{self.name}(dim={self.dim})"


class Simplex(Domain):
    """Probability simplex in ``R^d``."""

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = self.dim = int(d)
        self.diameter = math.sqrt(2.0) if d > 1 else 0.0

    @property
    def affine_dim(self) -> int:
        return self.d - 1

    def vertices(self):
        return np.eye(self.d)

    def lmo(self, gradient, rng=None, power_iters=500, power_tol=1e-9):
        g = self.check_point(gradient)
        return SignedBasis(int(np.argmin(g)), 1, self.d)

    def membership(self, x, tol=1e-9):
        x = self.check_point(x)
        if x.min() < -tol or abs(x.sum() - 1.0) > tol:
            return Membership.OUTSIDE
        # boundary is relative to the affine hull
        return Membership.BOUNDARY if x.min() <= tol else Membership.INSIDE

    def relative_interior_radius(self, x, rng=None):
        """Exact: facet ``x_i = 0`` lies at distance ``x_i * sqrt(d/(d-1))`` inside the hull."""
        x = self.check_point(x)
        self._require_inside(x)
        if self.d < 2:
            return 0.0
        return max(0.0, float(x.min())) * math.sqrt(self.d / (self.d - 1))

    def __repr__(self):
        return f"Simplex({self.d})"


class L1Ball(Domain):
    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = self.dim = int(d)
        self.diameter = 2.0

    def vertices(self):
        eye = np.eye(self.d)
        return np.vstack([eye, -eye])

    def lmo(self, gradient, rng=None, power_iters=500, power_tol=1e-9):
        g = self.check_point(gradient)
        j = int(np.argmax(np.abs(g)))
        return SignedBasis(j, int(_neg_sign(g[j:j + 1])[0]), self.d)

    def membership(self, x, tol=1e-9):
        return _classify(float(np.abs(self.check_point(x)).sum()), 1.0, tol)

    def relative_interior_radius(self, x, rng=None):
        """Distance to the nearest facet ``<s, x> = 1``: ``(1 - |x|_1) / sqrt(d)``."""
        x = self.check_point(x)
        self._require_inside(x)
        return max(0.0, 1.0 - float(np.abs(x).sum())) / math.sqrt(self.d)

    def __repr__(self):
        return f"L1Ball({self.d})"


class CubeNormalized(Domain):
    """The cube ``[-1/sqrt(d), 1/sqrt(d)]^d``; its vertices are unit vectors."""

    MAX_ENUM_DIM = 16

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = self.dim = int(d)
        self.diameter = 2.0
        self.half_width = 1.0 / math.sqrt(d)

    def vertices(self):
        if self.d > self.MAX_ENUM_DIM:
            return None
        bits = (np.arange(2 ** self.d)[:, None] >> np.arange(self.d)[None, :]) & 1
        return np.where(bits == 1, -1.0, 1.0) * self.half_width

    def lmo(self, gradient, rng=None, power_iters=500, power_tol=1e-9):
        g = self.check_point(gradient)
        return DenseVector(_neg_sign(g) * self.half_width)

    def membership(self, x, tol=1e-9):
        return _classify(float(np.abs(self.check_point(x)).max()), self.half_width, tol)

    def relative_interior_radius(self, x, rng=None):
        x = self.check_point(x)
        self._require_inside(x)
        return max(0.0, self.half_width - float(np.abs(x).max()))

    def __repr__(self):
        return f"CubeNormalized({self.d})"


class NuclearBall(Domain):
    """Unit Schatten-1 ball of ``m x n`` matrices, flattened row-major."""

    def __init__(self, m: int, n: int, membership_cap: int = NUCLEAR_MEMBERSHIP_CAP):
        if m < 1 or n < 1:
            raise ValueError("m and n must be >= 1")
        self.m, self.n = int(m), int(n)
        self.dim = self.m * self.n
        self.diameter = 2.0
        self.membership_cap = membership_cap

    def as_matrix(self, x) -> np.ndarray:
        return self.check_point(x).reshape(self.m, self.n)

    def lmo(self, gradient, rng=None, power_iters=500, power_tol=1e-9):
        G = self.as_matrix(gradient)
        _, u, v, converged = top_singular_pair(G, rng, power_iters, power_tol)
        return RankOne(u, v, -1, inexact=not converged)

    def nuclear_norm(self, x) -> float:
        if self.dim > self.membership_cap:
            raise ValueError("exact membership unsupported at this size")
        return float(np.linalg.svd(self.as_matrix(x), compute_uv=False).sum())

    def membership(self, x, tol=1e-9):
        return _classify(self.nuclear_norm(x), 1.0, tol)

    def relative_interior_radius(self, x, rng=None):
        """Certified lower bound ``(1 - |X|_S1) / sqrt(min(m, n))``; exact at ``X = 0``."""
        x = self.check_point(x)
        self._require_inside(x)
        return max(0.0, 1.0 - self.nuclear_norm(x)) / math.sqrt(min(self.m, self.n))

    def __repr__(self):
        return f"NuclearBall({self.m}, {self.n})"


class EuclideanBall(Domain):
    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = self.dim = int(d)
        self.diameter = 2.0

    def lmo(self, gradient, rng=None, power_iters=500, power_tol=1e-9):
        g = self.check_point(gradient)
        ng = np.linalg.norm(g)
        if ng == 0.0:
            s = np.zeros(self.d)
            s[0] = 1.0
            return DenseVector(s)
        return DenseVector(-g / ng)

    def membership(self, x, tol=1e-9):
        return _classify(float(np.linalg.norm(self.check_point(x))), 1.0, tol)

    def relative_interior_radius(self, x, rng=None):
        x = self.check_point(x)
        self._require_inside(x)
        return max(0.0, 1.0 - float(np.linalg.norm(x)))

    def __repr__(self):
        return f"EuclideanBall({self.d})"


class FinitePolytope(Domain):
    """Convex hull of finitely many points (rows of ``vertices``)."""

    def __init__(self, vertices, n_dirs: int = 256):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] < 1:
            raise ValueError("FinitePolytope needs at least one vertex, given as rows")
        if not np.all(np.isfinite(V)):
            raise ValueError("vertices must be finite")
        if V.shape[0] > 4096:
            raise ValueError("too many vertices for exact diameter")
        self.vertex_array = V
        self.dim = V.shape[1]
        self.n_dirs = n_dirs
        if V.shape[0] > 1:
            sq = (V ** 2).sum(1)
            gram = V @ V.T
            self.diameter = float(np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * gram, 0)).max())
            _, s, vt = np.linalg.svd(V - V.mean(axis=0), full_matrices=False)
            rank = int((s > 1e-10 * max(1.0, s[0])).sum())
            self._basis = vt[:rank]
        else:
            self.diameter = 0.0
            self._basis = np.zeros((0, self.dim))

    @property
    def n_vertices(self) -> int:
        return self.vertex_array.shape[0]

    @property
    def affine_dim(self) -> int:
        return self._basis.shape[0]

    @property
    def circumradius(self) -> float:
        return float(np.linalg.norm(self.vertex_array, axis=1).max())

    @property
    def is_simplex(self) -> bool:
        return self.affine_dim == self.n_vertices - 1

    def vertices(self):
        return self.vertex_array

    def lmo(self, gradient, rng=None, power_iters=500, power_tol=1e-9):
        g = self.check_point(gradient)
        j = int(np.argmin(self.vertex_array @ g))
        return DenseVector(self.vertex_array[j])

    def _depth_lp(self, x, slack):
        # max s  s.t.  |V^T lam - x| <= slack, sum lam = 1, lam >= s
        k = self.n_vertices
        c = np.zeros(k + 1)
        c[-1] = -1.0
        VT = np.hstack([self.vertex_array.T, np.zeros((self.dim, 1))])
        floor = np.hstack([-np.eye(k), np.ones((k, 1))])
        simplex_row = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
        if slack > 0:
            A_ub = np.vstack([VT, -VT, floor])
            b_ub = np.concatenate([x + slack, -x + slack, np.zeros(k)])
            A_eq, b_eq = simplex_row, [1.0]
        else:
            A_ub, b_ub = floor, np.zeros(k)
            A_eq, b_eq = np.vstack([VT, simplex_row]), np.append(x, 1.0)
        bounds = [(0, None)] * k + [(None, 1.0)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        return None if res.status != 0 else -res.fun

    def membership(self, x, tol=1e-9):
        """Relative interior = strictly positive convex combinations.

        The depth (largest achievable minimum weight) is found by an exact LP;
        a point that is not deep enough is on the boundary when it is within
        ``tol`` of the hull coordinatewise.
        """
        x = self.check_point(x)
        depth = self._depth_lp(x, 0.0)
        if depth is not None and (self.n_vertices == 1 or depth > tol):
            return Membership.INSIDE
        if depth is not None or self._depth_lp(x, tol) is not None:
            return Membership.BOUNDARY
        return Membership.OUTSIDE

    def exit_distance(self, x, u) -> float:
        """Largest ``t >= 0`` with ``x + t u`` in the polytope (ray-shooting LP)."""
        k = self.n_vertices
        c = np.zeros(k + 1)
        c[-1] = -1.0
        A_eq = np.vstack([
            np.hstack([self.vertex_array.T, -np.asarray(u, dtype=float)[:, None]]),
            np.hstack([np.ones((1, k)), np.zeros((1, 1))]),
        ])
        b_eq = np.concatenate([x, [1.0]])
        res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (k + 1), method="highs")
        if res.status != 0:
            return 0.0
        return float(-res.fun)

    def barycentric(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Barycentric coordinates of ``x`` and facet heights; simplices only."""
        if not self.is_simplex:
            raise ValueError("barycentric coordinates need affinely independent vertices")
        V = self.vertex_array
        M = (V[:-1] - V[-1]).T
        pinv = np.linalg.pinv(M)
        lam_head = pinv @ (x - V[-1])
        lam = np.append(lam_head, 1.0 - lam_head.sum())
        grads = np.vstack([pinv, -pinv.sum(axis=0)])
        heights = 1.0 / np.linalg.norm(grads, axis=1)
        return lam, heights

    def relative_interior_radius(self, x, rng=None, n_dirs: int | None = None):
        """Exact for simplices; otherwise the minimum exit distance over sampled directions.

        The sampled value is an over-estimate of the true radius that tightens as
        ``n_dirs`` grows.
        """
        x = self.check_point(x)
        self._require_inside(x)
        if self.affine_dim == 0:
            return 0.0
        if self.is_simplex:
            lam, heights = self.barycentric(x)
            return max(0.0, float((lam * heights).min()))
        rng = as_rng(rng)
        n_dirs = self.n_dirs if n_dirs is None else n_dirs
        coeffs = rng.standard_normal((n_dirs, self.affine_dim))
        dirs = coeffs @ self._basis
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        best = math.inf
        for u in dirs:
            best = min(best, self.exit_distance(x, u), self.exit_distance(x, -u))
        return best

    def __repr__(self):
        return f"FinitePolytope(n_vertices={self.n_vertices}, dim={self.dim})"


# --------------------------------------------------------------------------- functional API


def lmo(domain: Domain, gradient, power_iters: int = 500, power_tol: float = 1e-9, rng=None) -> Atom:
    """Extreme point minimizing ``<gradient, s>`` over ``domain``."""
    return domain.lmo(gradient, rng=rng, power_iters=power_iters, power_tol=power_tol)


def membership(domain: Domain, x, tol: float = 1e-9) -> Membership:
    if tol <= 0:
        raise ValueError("tol must be positive")
    return domain.membership(x, tol)


def relative_interior_radius(domain: Domain, x, rng=None) -> float:
    return domain.relative_interior_radius(x, rng=rng)


def random_point(domain: Domain, rng=None) -> np.ndarray:
    """A random point of the domain (uniform where that is cheap)."""
    rng = as_rng(rng)
    if isinstance(domain, Simplex):
        return rng.dirichlet(np.ones(domain.d))
    if isinstance(domain, L1Ball):
        # first d coordinates of a uniform point on Delta(d+1), with random signs
        w = rng.dirichlet(np.ones(domain.d + 1))[:-1]
        return w * rng.choice([-1.0, 1.0], size=domain.d)
    if isinstance(domain, CubeNormalized):
        return rng.uniform(-domain.half_width, domain.half_width, size=domain.d)
    if isinstance(domain, EuclideanBall):
        g = rng.standard_normal(domain.d)
        return g / np.linalg.norm(g) * rng.uniform() ** (1.0 / domain.d)
    if isinstance(domain, NuclearBall):
        A = rng.standard_normal((domain.m, domain.n))
        A /= np.linalg.svd(A, compute_uv=False).sum()
        return (A * rng.uniform()).ravel()
    if isinstance(domain, FinitePolytope):
        return rng.dirichlet(np.ones(domain.n_vertices)) @ domain.vertex_array
    raise TypeError(f"no sampler for {domain!r}")
