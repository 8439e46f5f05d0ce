"""Plain-text readers and writers: meshes, curve configs, reports.

All float output uses fixed formats, so reruns produce identical bytes.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from pathlib import Path

import numpy as np

from . import curve_geometry as cg
from .errors import ConfigError
from .triangulation import Triangulation

REPORT_FMT = "{:.12g}"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return REPORT_FMT.format(v)


# --------------------------------------------------------------------------
# meshes


def save_mesh(tri: Triangulation, path) -> None:
    """``nv nt`` header, ``x y`` rows (``%.17g``), then 0-based ``i j k`` rows."""
    lines = [f"{tri.n_vertices} {tri.n_triangles}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in tri.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in tri.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Triangulation:
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows or len(rows[0]) != 2:
        raise ConfigError(f"{path}: first line must be 'nv nt'")
    try:
        nv, nt = int(rows[0][0]), int(rows[0][1])
    except ValueError:
        raise ConfigError(f"{path}: bad header {rows[0]}") from None
    if len(rows) != 1 + nv + nt:
        raise ConfigError(f"{path}: expected {nv} vertex and {nt} triangle lines, got {len(rows) - 1} lines")
    try:
        V = np.array([[float(a) for a in r] for r in rows[1 : 1 + nv]], dtype=float).reshape(nv, 2)
        T = np.array([[int(a) for a in r] for r in rows[1 + nv :]], dtype=np.int64).reshape(nt, 3)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return Triangulation(V, T)


# --------------------------------------------------------------------------
# curve configs


def _floats(text, n=None, what="value"):
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what} needs {n} numbers, got {len(vals)}")
    return vals


def _require(sec, key):
    if key not in sec:
        raise ConfigError(f"[{sec.name}] is missing '{key}'")
    return sec[key]


def parse_curve_config(text: str, source="<string>") -> cg.BoundaryCurve:
    """Build a curve from config text.

    Every section whose name starts with ``curve`` is one component::

        [curve]
        kind = circle
        center = 0.0, 0.0
        radius = 1.0

        [curve 2]
        kind = spline
        points =
            1.0 0.0
            0.0 1.2
            -1.0 0.0
            0.0 -0.8

    Kinds: ``circle`` (center, radius), ``ellipse`` (center, semi_axes),
    ``spline`` (points, one control point per line, periodic) and
    ``implicit`` (expr in x and y, negative inside, and bbox = x0, y0, x1, y1;
    optional resolution).  An implicit section must be the only one, since
    its zero set may already have several components.
    """
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=str(source))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    secs = [cp[s] for s in cp.sections() if s.split()[0] == "curve"]
    if not secs:
        raise ConfigError(f"{source}: no [curve] section")
    curves = []
    for sec in secs:
        kind = _require(sec, "kind").strip().lower()
        if kind == "circle":
            r = _floats(_require(sec, "radius"), 1, "radius")[0]
            if r <= 0:
                raise ConfigError("radius must be positive")
            curves.append(cg.circle(_floats(sec.get("center", "0 0"), 2, "center"), r))
        elif kind == "ellipse":
            a, b = _floats(_require(sec, "semi_axes"), 2, "semi_axes")
            if a <= 0 or b <= 0:
                raise ConfigError("semi_axes must be positive")
            curves.append(cg.ellipse(_floats(sec.get("center", "0 0"), 2, "center"), a, b))
        elif kind == "spline":
            pts = [_floats(ln, 2, "control point") for ln in _require(sec, "points").splitlines() if ln.strip()]
            if len(pts) < 4:
                raise ConfigError("a closed spline needs at least 4 control points")
            curves.append(cg.spline(np.array(pts)))
        elif kind == "implicit":
            if len(secs) > 1:
                raise ConfigError("an implicit curve cannot be combined with other sections")
            bbox = _floats(_require(sec, "bbox"), 4, "bbox")
            res = int(sec.get("resolution", "512"))
            try:
                return cg.ImplicitCurve.from_expression(_require(sec, "expr"), bbox, res)
            except (SyntaxError, TypeError, ValueError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad implicit expression: {exc}") from None
        else:
            raise ConfigError(f"unknown curve kind {kind!r}")
    return curves[0] if len(curves) == 1 else cg.union(*curves)


def load_curve(path) -> cg.BoundaryCurve:
    return parse_curve_config(Path(path).read_text(), source=path)


# --------------------------------------------------------------------------
# reports

CHECK_COLUMNS = [
    "k", "h_K", "sigma_K", "theta_K", "theta_adj", "M_K", "C_Kh", "eta", "beta", "conds",
    "sigma_C_h", "limit_c", "slack_a", "slack_b", "slack_c", "slack_d",
]

SAMPLE_COLUMNS = ["loop", "edge_v0", "edge_v1", "owner", "x", "y", "pix", "piy", "phi", "J", "blo", "bhi", "s"]


def write_classification(cls, path) -> None:
    Path(path).write_text(json.dumps(cls.to_dict(), indent=1, sort_keys=True) + "\n")


def write_check_csv(report, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CHECK_COLUMNS)
        for r in report.rows:
            w.writerow([_fmt(v) for v in (
                r.triangle, r.h_K, r.sigma_K, r.theta_K, r.theta_adj, r.M_K, r.C_Kh, r.eta_K,
                r.beta_K,
            )] + [r.conds] + [_fmt(v) for v in (
                r.value_c, r.limit_c, r.slack_a, r.slack_b, r.slack_c, r.slack_d,
            )])


def check_table(report) -> str:
    """Human-readable condition table; failing rows are flagged."""
    head = f"{'k':>6} {'h_K':>8} {'theta':>8} {'M_K':>9} {'C_Kh':>9} {'eta':>7} {'beta':>8} {'sCh':>8} {'lim_c':>7} conds"
    out = [head]
    for r in report.rows:
        out.append(
            f"{r.triangle:>6} {r.h_K:8.4f} {r.theta_K:8.3f} {r.M_K:9.5f} {r.C_Kh:9.5f} "
            f"{r.eta_K:7.4f} {r.beta_K:8.3f} {r.value_c:8.5f} {r.limit_c:7.4f} {r.conds}"
            + ("" if r.passed else "  FAIL")
        )
    touched = ", ".join(f"{c}:{'yes' if t else 'NO'}" for c, t in enumerate(report.components_touched))
    out.append(f"components reached by positive edges: {touched}")
    out.append(f"{len(report.rows)} positively cut triangles, {len(report.failing())} failing; "
               f"all conditions {'pass' if report.all_pass else 'FAIL'}")
    return "\n".join(out) + "\n"


def write_loops(loops, path) -> None:
    Path(path).write_text("".join(" ".join(map(str, lp.vertex_cycle)) + "\n" for lp in loops))


def read_loops(path) -> list:
    """Vertex cycles from a loop dump, one list per loop."""
    out = []
    for ln in Path(path).read_text().splitlines():
        if ln.strip():
            try:
                out.append([int(t) for t in ln.split()])
            except ValueError:
                raise ConfigError(f"{path}: bad loop line {ln!r}") from None
    return out


def write_samples_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for ls in samples:
            for i in range(len(ls)):
                w.writerow(
                    [ls.loop_id, int(ls.v0[i]), int(ls.v1[i]), int(ls.owner[i])]
                    + [_fmt(v) for v in (
                        ls.x[i, 0], ls.x[i, 1], ls.foot[i, 0], ls.foot[i, 1], ls.phi[i],
                        ls.J[i], ls.bound_lo[i], ls.bound_hi[i], ls.s[i],
                    )]
                )


def write_verification(vr, path) -> None:
    Path(path).write_text("\n".join(vr.summary_lines()) + "\n")
