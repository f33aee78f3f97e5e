"""Columnar plot data from result CSVs; rendering is left to external tools."""
from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .csvio import format_value, read_csv

__all__ = ["emit_plot_data"]


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) or "group"


def emit_plot_data(csv_in, x: str, y: str, out_dir, group_by: str | None = None, log_axes: bool = False,
                   fit: bool = False) -> dict:
    """Write one whitespace-separated file per group with ``x`` and the median of ``y`` at each ``x``.

    With ``fit`` a least-squares line through ``(log x, log median y)`` is
    appended as a third column and its slope recorded in the file header.
    Returns ``{group: (path, slope)}``.
    """
    header, rows = read_csv(csv_in)
    for col in (x, y) + ((group_by,) if group_by else ()):
        if col not in header:
            raise KeyError(f"column {col!r} not found; available columns: {', '.join(header)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(csv_in).stem
    if not rows:
        path = out_dir / f"{stem}.dat"
        path.write_text("", encoding="utf-8")
        return {"": (path, math.nan)}
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row[group_by] if group_by else "", []).append(row)
    result = {}
    for name, grp in groups.items():
        by_x: dict[float, list] = {}
        for row in grp:
            try:
                xv, yv = float(row[x]), float(row[y])
            except ValueError:
                continue
            by_x.setdefault(xv, []).append(yv)
        xs = np.array(sorted(by_x))
        meds = np.array([np.median(by_x[v]) for v in xs])
        slope, intercept = math.nan, math.nan
        ok = (xs > 0) & (meds > 0)
        if fit and ok.sum() >= 2:
            slope, intercept = np.polyfit(np.log(xs[ok]), np.log(meds[ok]), 1)
        fname = f"{stem}_{_safe(group_by)}_{_safe(name)}.dat" if group_by else f"{stem}.dat"
        lines = [f"# x={x} y=median({y})" + (f" group {group_by}={name}" if group_by else "")]
        if log_axes:
            lines.append("# axes: log-log")
        if fit:
            lines.append(f"# fit: log y = {format_value(float(slope))} log x + {format_value(float(intercept))}")
        for xv, mv in zip(xs, meds):
            cols = [format_value(float(xv)), format_value(float(mv))]
            if fit and not math.isnan(slope) and xv > 0:
                cols.append(format_value(float(math.exp(intercept) * xv ** slope)))
            lines.append(" ".join(cols))
        path = out_dir / fname
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        result[name] = (path, float(slope))
    return result
