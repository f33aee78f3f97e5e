"""Declarative experiment configuration: flat JSON, validated before anything runs."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "parse_config", "load_config", "default_config",
           "make_domain"]


class ConfigError(ValueError):
    """Raised with every field diagnostic found, one per line."""

    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("\n".join(self.problems))


def _int(lo=None, hi=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            return "must be an integer"
        if lo is not None and v < lo:
            return f"must be >= {lo}"
        if hi is not None and v > hi:
            return f"must be <= {hi}"
    return check


def _num(lo=None, hi=None, open_lo=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            return "must be a finite number"
        if lo is not None and (v <= lo if open_lo else v < lo):
            return f"must be {'>' if open_lo else '>='} {lo}"
        if hi is not None and v > hi:
            return f"must be <= {hi}"
    return check


def _choice(*options):
    def check(v):
        if v not in options:
            return f"must be one of {list(options)}"
    return check


def _list_of(item_check, min_len=1, ascending=False):
    def check(v):
        if not isinstance(v, list) or len(v) < min_len:
            return f"must be a list with at least {min_len} entries"
        for i, x in enumerate(v):
            msg = item_check(x)
            if msg:
                return f"entry {i} {msg}"
        if ascending and v != sorted(v):
            return "must be sorted ascending"
    return check


def _bool(v):
    if not isinstance(v, bool):
        return "must be true or false"


def _str(v):
    if not isinstance(v, str) or not v:
        return "must be a non-empty string"


def _target(v):
    if v == "random":
        return None
    if not isinstance(v, list) or not v or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                                   for x in v):
        return 'must be "random" or a list of numbers'


def _vertices(v):
    if v is None:
        return None
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        return "must be a list of coordinate lists"
    if len({len(r) for r in v}) != 1:
        return "all vertices must share one dimension"


DOMAINS = ("simplex", "l1", "cube", "nuclear", "ball", "polytope")
ALGOS = ("vanilla", "vanilla_harmonic", "away", "fully_corrective")

COMMON = {
    "kind": (None, _str),
    "seed": (0, _int(0, 2 ** 64 - 1)),
    "trials": (1, _int(1)),
    "workers": (None, lambda v: None if v is None else _int(1)(v)),
    "out": ("results", _str),
    "min_success_fraction": (1.0, _num(0.0, 1.0, open_lo=True)),
}

DOMAIN_FIELDS = {
    "domain": ("simplex", _choice(*DOMAINS)),
    "d": (3, _int(1)),
    "rows": (2, _int(1)),
    "cols": (2, _int(1)),
    "vertices": (None, _vertices),
}

SCHEMAS = {
    "fw_run": {**DOMAIN_FIELDS, "algo": ("vanilla", _choice(*ALGOS)), "steps": (50, _int(1)),
               "target": ("random", _target), "inner_iters": (200, _int(1)), "outside_scale": (1.0, _num(0.0))},
    "compressibility": {**DOMAIN_FIELDS, "algo": ("best", _choice("best", *ALGOS)), "eps": (0.1, _num(0.0, open_lo=True)),
                        "max_steps": (500, _int(1)), "bound": ("none", _choice("none", "l1", "simplex")),
                        "delta": (None, lambda v: None if v is None else _num(0.0, open_lo=True)(v))},
    "bounds_table": {"formulas": (["ex_l1", "ex_cube", "ex_nuclear", "simplex"],
                                  _list_of(_choice("ex_l1", "ex_l1_general", "ex_cube", "ex_cube_general",
                                                   "ex_nuclear", "ex_nuclear_general", "simplex", "l1_volume"))),
                     "d_grid": ([8, 16, 32], _list_of(_int(2))),
                     "eps_grid": ([0.01, 0.05], _list_of(_num(0.0, 1.0, open_lo=True)))},
    "randpoly_study": {"d": (8, _int(2)), "m": (2000, _int(1)), "polytope": ("spherical", _choice("spherical", "gaussian")),
                       "delta": (0.0625, _num(0.0, open_lo=True)), "n_dirs": (100_000, _int(1))},
    "cap_study": {"d_grid": ([6, 10, 20], _list_of(_int(2))),
                  "r_grid": ([], _list_of(_num(0.0, 1.0), min_len=0)),
                  "samples": (100_000, _int(1)), "t": (1.0, _num(0.0, open_lo=True))},
    "aggregation": {"n": (256, _int(2)), "m": (64, _int(2)), "k_steps": (8, _int(1)),
                    "algo": ("vanilla", _choice(*ALGOS)), "eta": (0.1, _num(0.0, 1.0, open_lo=True)),
                    "dictionary": ("gaussian", _choice("gaussian", "cross"))},
    "fast_rate": {"study": ("interior", _choice("interior", "exterior")), "alpha": (0.75, _num(0.5, 1.0, open_lo=True)),
                  "c": (0.5, _num(0.0, open_lo=True)), "n_grid": ([256, 512, 1024, 2048], _list_of(_int(2), ascending=True)),
                  "m": (32, _int(2)), "eta": (0.1, _num(0.0, 1.0, open_lo=True)),
                  "dictionary": ("cross", _choice("gaussian", "cross")), "offset": (0.5, _num(0.0)),
                  "persistence": (True, _bool)},
    "linear_rate": {**DOMAIN_FIELDS, "r_grid": ([0.04], _list_of(_num(0.0))), "k_max": (2000, _int(1))},
}
KINDS = tuple(SCHEMAS)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    trials: int
    out: str
    params: dict = field(default_factory=dict)
    workers: int | None = None
    min_success_fraction: float = 1.0

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "seed": self.seed, "trials": self.trials, "out": self.out,
             "min_success_fraction": self.min_success_fraction}
        if self.workers is not None:
            d["workers"] = self.workers
        d.update(copy.deepcopy(self.params))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def hash(self) -> str:
        """Digest of everything that affects results (output path and worker count excluded)."""
        d = self.to_dict()
        d.pop("out")
        d.pop("workers", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()[:16]

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return parse_config(d)


def parse_config(data) -> ExperimentConfig:
    """Validate a mapping; unknown keys and bad values are all reported together."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    kind = data.get("kind")
    if kind not in SCHEMAS:
        raise ConfigError(f"kind: must be one of {list(KINDS)}, got {kind!r}")
    schema = {**COMMON, **SCHEMAS[kind]}
    problems = [f"{k}: unknown key for kind {kind!r}" for k in data if k not in schema]
    values = {}
    for key, (default, check) in schema.items():
        v = data.get(key, copy.deepcopy(default))
        if key in data or v is not None:
            msg = check(v)
            if msg:
                problems.append(f"{key}: {msg} (got {v!r})")
        values[key] = v
    if kind in ("fw_run", "compressibility", "linear_rate"):
        problems += _domain_problems(values)
    if problems:
        raise ConfigError(problems)
    common = {k: values.pop(k) for k in list(COMMON)}
    return ExperimentConfig(kind=common["kind"], seed=common["seed"], trials=common["trials"], out=common["out"],
                            params=values, workers=common["workers"],
                            min_success_fraction=float(common["min_success_fraction"]))


def _domain_problems(v):
    out = []
    if v["domain"] == "polytope" and v.get("vertices") is None:
        out.append("vertices: required when domain is 'polytope'")
    if v["domain"] == "simplex" and v["d"] < 2:
        out.append("d: simplex needs d >= 2")
    target = v.get("target")
    if isinstance(target, list):
        if v["domain"] == "polytope" and v.get("vertices"):
            dim = len(v["vertices"][0])
        else:
            dim = v["rows"] * v["cols"] if v["domain"] == "nuclear" else v["d"]
        if len(target) != dim:
            out.append(f"target: must have {dim} entries, got {len(target)}")
    return out


def load_config(path) -> ExperimentConfig:
    """Read a JSON file; syntax errors report line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(data)


def default_config(kind: str) -> ExperimentConfig:
    return parse_config({"kind": kind})


def make_domain(params: dict):
    """Build the geometry domain named in a config's parameters."""
    from .. import geometry as g

    name = params["domain"]
    d = params["d"]
    if name == "simplex":
        return g.Simplex(d)
    if name == "l1":
        return g.L1Ball(d)
    if name == "cube":
        return g.CubeNormalized(d)
    if name == "ball":
        return g.EuclideanBall(d)
    if name == "nuclear":
        return g.NuclearBall(params["rows"], params["cols"])
    return g.FinitePolytope(params["vertices"])
