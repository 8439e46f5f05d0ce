"""Closed C^2 planar curves and their closest point machinery.

Orientation convention: the unit normal ``N`` points out of the enclosed
region, so it coincides with the gradient of the signed distance on the
curve, and the unit tangent ``T`` is chosen so that ``{T, N}`` is
right-handed (``N`` is ``T`` rotated by +90 degrees).  Under this convention
a circle is traversed clockwise and has signed curvature ``-1/R``.

Every curve exposes a batched :meth:`BoundaryCurve.project` returning a
:class:`Projection` of arrays; the scalar functions at the bottom of the
module (:func:`signed_distance`, :func:`closest_point`, :func:`grad_pi`, ...)
are thin wrappers over it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import (
    CurvatureSingularity,
    DegenerateCurve,
    InvariantViolation,
    OutsideTube,
    ProjectionDidNotConverge,
)

TOL_PROJ_REL = 1e-10
TOL_FD = 1e-3
TOL_ANGLE = 1e-8
EPS_SING = 1e-6

_TABLE_INTERVALS = 4096
_N_CANDIDATES = 3
_MAX_NEWTON = 100


def rot90(v):
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _as_points(p):
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"expected points of shape (n, 2), got {p.shape}")
    return p


class Projection(NamedTuple):
    """Batched closest point data, one row per query point."""

    position: np.ndarray  # (n, 2) foot points on the curve
    tangent: np.ndarray  # (n, 2)
    normal: np.ndarray  # (n, 2)
    curvature: np.ndarray  # (n,) signed curvature at the foot
    phi: np.ndarray  # (n,) signed distance of the query point
    component: np.ndarray  # (n,) int
    s: np.ndarray  # (n,) arclength fraction in [0, 1) along T
    param: np.ndarray  # (n,) curve-kind specific parameter of the foot

    def __len__(self):
        return self.position.shape[0]

    def take(self, idx):
        return Projection(*(np.asarray(a)[idx] for a in self))


@dataclass(frozen=True, eq=False)
class CurvePoint:
    position: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    signed_curvature: float
    component_id: int
    arclength_param: float = 0.0


@dataclass(frozen=True)
class ReachEstimate:
    r_n: float
    method: str  # "analytic" | "sampled"
    sample_count: int
    details: dict = field(default_factory=dict, compare=False)


def _mask_failed(pr: Projection, ok) -> Projection:
    if ok.all():
        return pr
    bad = ~ok
    cols = []
    for a in pr:
        a = np.array(a, dtype=float)
        a[bad] = np.nan
        cols.append(a)
    cols[5] = np.where(bad, -1, pr.component)
    return Projection(*cols)


def _local_minima_candidates(d2, k):
    """Indices (n, k) of the k smallest cyclic local minima per row, inf-padded."""
    mask = (d2 <= np.roll(d2, 1, axis=1)) & (d2 <= np.roll(d2, -1, axis=1))
    dm = np.where(mask, d2, np.inf)
    k = min(k, d2.shape[1])
    idx = np.argpartition(dm, k - 1, axis=1)[:, :k]
    return idx, np.take_along_axis(dm, idx, axis=1)


def _even_odd_inside(points, loops):
    """Even-odd crossing test of points against closed polylines."""
    points = _as_points(points)
    inside = np.zeros(len(points), dtype=bool)
    px, py = points[:, 0:1], points[:, 1:2]
    for poly in loops:
        a = poly
        b = np.roll(poly, -1, axis=0)
        ay, by = a[None, :, 1], b[None, :, 1]
        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a[None, :, 0] + (py - ay) * (b[None, :, 0] - a[None, :, 0]) / (by - ay)
        inside ^= (np.count_nonzero(straddle & (px < xint), axis=1) % 2).astype(bool)
    return inside


class BoundaryCurve:
    """A closed C^2-regular boundary with one or more Jordan components."""

    kind = "abstract"

    #: per-component arclength, set by subclasses
    lengths: np.ndarray
    reach: ReachEstimate

    @property
    def n_components(self) -> int:
        return len(self.lengths)

    @property
    def bbox(self):
        return tuple(float(v) for v in self._bbox)

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self._bbox
        return float(np.hypot(x1 - x0, y1 - y0))

    @property
    def tol_proj(self) -> float:
        return TOL_PROJ_REL * self.diameter

    def project(self, points, strict=True) -> Projection:
        """Closest point data for each row of ``points``.

        With ``strict=False`` rows whose solve fails come back as NaN instead
        of raising :class:`ProjectionDidNotConverge`.
        """
        raise NotImplementedError

    def sample(self, spacing=None, n=None) -> Projection:
        """Points on the curve, roughly uniform in arclength, with phi = 0."""
        raise NotImplementedError

    def inside(self, points) -> np.ndarray:
        raise NotImplementedError

    def refine_max_curvature(self, component, param_lo, param_hi):
        """Max |curvature| on a parameter window, or None if unsupported."""
        return None

    def polylines(self, n=1024):
        smp = self.sample(n=n)
        return [smp.position[smp.component == c] for c in range(self.n_components)]

    def _analytic_reach(self):
        return None

    def _finish(self):
        self.reach = estimate_reach(self)


# --------------------------------------------------------------------------
# parametric components


class ClosedPath:
    """A periodic C^2 map t -> R^2 with nonvanishing derivative."""

    period: float

    def eval(self, t, nu=0):
        raise NotImplementedError


class CirclePath(ClosedPath):
    def __init__(self, center, radius):
        if radius <= 0:
            raise DegenerateCurve("circle radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.period = 2 * np.pi

    def eval(self, t, nu=0):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        r = self.radius
        if nu == 0:
            return self.center + r * np.stack([c, s], axis=-1)
        if nu == 1:
            return r * np.stack([-s, c], axis=-1)
        if nu == 2:
            return r * np.stack([-c, -s], axis=-1)
        raise ValueError(nu)


class EllipsePath(ClosedPath):
    def __init__(self, center, a, b):
        if a <= 0 or b <= 0:
            raise DegenerateCurve("ellipse semi-axes must be positive")
        self.center = np.asarray(center, dtype=float)
        self.a, self.b = float(a), float(b)
        self.period = 2 * np.pi

    def eval(self, t, nu=0):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        a, b = self.a, self.b
        if nu == 0:
            return self.center + np.stack([a * c, b * s], axis=-1)
        if nu == 1:
            return np.stack([-a * s, b * c], axis=-1)
        if nu == 2:
            return np.stack([-a * c, -b * s], axis=-1)
        raise ValueError(nu)


class SplinePath(ClosedPath):
    """Periodic interpolating cubic spline through control points (chord-length knots)."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DegenerateCurve("spline control points must have shape (n, 2)")
        if len(pts) > 1 and np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < 3:
            raise DegenerateCurve("a closed spline needs at least 3 distinct control points")
        closed = np.vstack([pts, pts[:1]])
        chords = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        if np.any(chords <= 0):
            raise DegenerateCurve("repeated consecutive spline control points")
        knots = np.concatenate([[0.0], np.cumsum(chords)])
        self.control_points = pts
        self.period = float(knots[-1])
        self._cs = CubicSpline(knots, closed, bc_type="periodic", axis=0)

    def eval(self, t, nu=0):
        t = np.mod(np.asarray(t, dtype=float), self.period)
        return self._cs(t, nu)


class ParametricCurve(BoundaryCurve):
    """Union of disjoint closed parametric components.

    Projection is a multistart solve: a global sweep over ``m`` parameter
    samples per component seeds a safeguarded Newton iteration on the
    stationarity condition ``(gamma(t) - p) . gamma'(t) = 0``.
    """

    def __init__(self, paths: Sequence[ClosedPath], kind="composite"):
        if not paths:
            raise DegenerateCurve("no components")
        self.kind = kind
        self.paths = list(paths)
        self._tables = []
        lengths = []
        gl_x, gl_w = np.polynomial.legendre.leggauss(4)
        for path in self.paths:
            tg = np.linspace(0.0, path.period, _TABLE_INTERVALS + 1)
            h = np.diff(tg)
            mid = 0.5 * (tg[:-1] + tg[1:])
            nodes = mid[:, None] + 0.5 * h[:, None] * gl_x[None, :]
            speed = np.linalg.norm(path.eval(nodes, 1), axis=-1)
            seg = 0.5 * h * (speed * gl_w[None, :]).sum(axis=1)
            if np.any(speed <= 0):
                raise DegenerateCurve("parameterization has vanishing speed")
            S = np.concatenate([[0.0], np.cumsum(seg)])
            self._tables.append((tg, S))
            lengths.append(S[-1])
        self.lengths = np.array(lengths)
        self._sigma = np.ones(len(self.paths))

        # preliminary curvature scale sets the sweep density
        kmax = 0.0
        for c, (tg, _) in enumerate(self._tables):
            kmax = max(kmax, np.abs(self._kappa_std(c, tg[:-1])).max())
        if kmax > 1.0 / EPS_SING:
            raise DegenerateCurve(f"curvature {kmax:.3g} exceeds 1/eps_sing")
        pts = np.vstack([self.paths[c].eval(tg[:-1]) for c, (tg, _) in enumerate(self._tables)])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        self._bbox = (lo[0], lo[1], hi[0], hi[1])
        r_pre = min(1.0 / kmax if kmax > 0 else np.inf, self.diameter)
        self._sweep = []
        for c, path in enumerate(self.paths):
            m = int(min(_TABLE_INTERVALS, max(256, np.ceil(4 * self.lengths[c] / r_pre))))
            ts = np.linspace(0.0, path.period, m, endpoint=False)
            self._sweep.append((ts, path.eval(ts)))

        self._orient(r_pre)
        self._finish()
        self._check_curvature_sign()

    # -- helpers
    def _kappa_std(self, c, t):
        g1 = self.paths[c].eval(t, 1)
        g2 = self.paths[c].eval(t, 2)
        return cross2(g1, g2) / np.linalg.norm(g1, axis=-1) ** 3

    def _s_of_t(self, c, t):
        tg, S = self._tables[c]
        s = np.interp(np.mod(t, self.paths[c].period), tg, S) / self.lengths[c]
        if self._sigma[c] < 0:
            s = 1.0 - s
        return np.mod(s, 1.0)

    def _frame(self, c, t):
        path = self.paths[c]
        g0, g1, g2 = path.eval(t, 0), path.eval(t, 1), path.eval(t, 2)
        speed = np.linalg.norm(g1, axis=-1)
        T = self._sigma[c] * g1 / speed[..., None]
        N = rot90(T)
        kappa = self._sigma[c] * cross2(g1, g2) / speed**3
        return g0, T, N, kappa

    def _orient(self, r_pre):
        loops = [self.paths[c].eval(tg[:-1]) for c, (tg, _) in enumerate(self._tables)]
        sep = np.inf
        for i in range(len(self.paths)):
            for j in range(i + 1, len(self.paths)):
                a, b = self._sweep[i][1], self._sweep[j][1]
                d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min()
                if d <= 0:
                    raise DegenerateCurve(f"components {i} and {j} intersect")
                sep = min(sep, d)
        delta = 1e-3 * min(r_pre, sep)
        for c, path in enumerate(self.paths):
            tg = self._tables[c][0][:-1]
            j = int(np.argmin(np.abs(self._kappa_std(c, tg))))
            g0, g1 = path.eval(tg[j]), path.eval(tg[j], 1)
            left = rot90(g1 / np.linalg.norm(g1))
            probes = np.array([g0 + delta * left, g0 - delta * left])
            ins = _even_odd_inside(probes, loops)
            if ins[0] == ins[1]:
                raise DegenerateCurve(f"cannot orient component {c}")
            # left of the direction of travel is outside -> travel direction is T
            self._sigma[c] = -1.0 if ins[0] else 1.0
        self._loops = loops

    def _check_curvature_sign(self):
        # second difference of phi along T must equal -kappa_s
        c = int(np.argmax(self.lengths))
        tg = self._tables[c][0][:-1]
        j = int(np.argmax(np.abs(self._kappa_std(c, tg))))
        g0, T, _, kappa = self._frame(c, tg[j])
        if abs(kappa) * self.diameter < 1e-6:
            return
        step = 1e-4 * min(self.reach.r_n, 1.0 / abs(kappa))
        ph = self.project(np.array([g0 + step * T, g0, g0 - step * T])).phi
        second = (ph[0] - 2 * ph[1] + ph[2]) / step**2
        if np.sign(second) != np.sign(-kappa):
            raise InvariantViolation("signed curvature inconsistent with the Hessian of phi")

    # -- public
    def inside(self, points):
        return self.project(points).phi < 0

    def _analytic_reach(self):
        if len(self.paths) != 1:
            return None
        p = self.paths[0]
        if isinstance(p, CirclePath):
            return p.radius
        if isinstance(p, EllipsePath):
            a, b = max(p.a, p.b), min(p.a, p.b)
            return b * b / a
        return None

    def _newton(self, c, P, t, lo, hi):
        path = self.paths[c]
        tol = self.tol_proj
        dt = self.paths[c].period / len(self._sweep[c][0])
        conv = np.zeros(len(t), dtype=bool)
        for _ in range(_MAX_NEWTON):
            g0, g1, g2 = path.eval(t, 0), path.eval(t, 1), path.eval(t, 2)
            d = g0 - P
            f = (d * g1).sum(-1)
            fp = (g1 * g1).sum(-1) + (d * g2).sum(-1)
            conv = np.abs(f) <= tol * np.linalg.norm(g1, axis=-1)
            if conv.all():
                break
            lo = np.where(f < 0, t, lo)
            hi = np.where(f > 0, t, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                tn = t - f / fp
            bracketed = np.isfinite(lo) & np.isfinite(hi)
            bad = ~np.isfinite(tn) | (fp <= 0)
            bad_b = bad | (tn <= lo) | (tn >= hi)
            with np.errstate(invalid="ignore"):
                bisect = 0.5 * (lo + hi)
            # unbracketed rows: descend with a capped step
            step = np.clip(np.where(bad, -np.sign(f) * dt, tn - t), -dt, dt)
            tn = np.where(bracketed, np.where(bad_b, bisect, tn), t + step)
            t = np.where(conv, t, tn)
        # one polishing step pushes the residual well below tol
        g0, g1, g2 = path.eval(t, 0), path.eval(t, 1), path.eval(t, 2)
        d = g0 - P
        f = (d * g1).sum(-1)
        fp = (g1 * g1).sum(-1) + (d * g2).sum(-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = -f / fp
        ok = conv & (fp > 0) & (np.abs(step) < dt)
        return np.where(ok, t + step, t), conv

    def project(self, points, strict=True) -> Projection:
        P = _as_points(points)
        n = len(P)
        best_d = np.full(n, np.inf)
        best_c = np.zeros(n, dtype=int)
        best_t = np.zeros(n)
        any_conv = np.zeros(n, dtype=bool)
        for c, (ts, G) in enumerate(self._sweep):
            d2 = ((P[:, None, :] - G[None, :, :]) ** 2).sum(-1)
            idx, dval = _local_minima_candidates(d2, _N_CANDIDATES)
            m = len(ts)
            dt = self.paths[c].period / m
            live = np.isfinite(dval).ravel()
            rows = np.repeat(np.arange(n), idx.shape[1])[live]
            t0 = ts[idx.ravel()[live]]
            Pr = P[rows]
            lo, hi = t0 - dt, t0 + dt
            path = self.paths[c]
            f_lo = ((path.eval(lo) - Pr) * path.eval(lo, 1)).sum(-1)
            f_hi = ((path.eval(hi) - Pr) * path.eval(hi, 1)).sum(-1)
            ok = (f_lo <= 0) & (f_hi >= 0)
            lo = np.where(ok, lo, -np.inf)
            hi = np.where(ok, hi, np.inf)
            t_live, conv_live = self._newton(c, Pr, t0, lo, hi)
            d_live = np.linalg.norm(path.eval(t_live) - Pr, axis=-1)
            # reduce candidates per point
            dist = np.full(live.shape, np.inf)
            dist[live] = np.where(conv_live, d_live, np.inf)
            conv = np.zeros(live.shape, dtype=bool)
            conv[live] = conv_live
            tt = np.zeros(live.shape)
            tt[live] = t_live
            dist = dist.reshape(n, -1)
            tt = tt.reshape(n, -1)
            j = np.argmin(dist, axis=1)
            dj = dist[np.arange(n), j]
            better = dj < best_d
            best_d = np.where(better, dj, best_d)
            best_t = np.where(better, tt[np.arange(n), j], best_t)
            best_c = np.where(better, c, best_c)
            any_conv |= conv.reshape(n, -1).any(axis=1)
        if strict and not any_conv.all():
            bad = P[~any_conv][0]
            raise ProjectionDidNotConverge(f"closest point solve failed at {bad}")
        pos = np.empty((n, 2))
        T = np.empty((n, 2))
        kap = np.empty(n)
        s = np.empty(n)
        for c in range(len(self.paths)):
            sel = best_c == c
            if not sel.any():
                continue
            g0, Tc, _, kc = self._frame(c, best_t[sel])
            pos[sel], T[sel], kap[sel] = g0, Tc, kc
            s[sel] = self._s_of_t(c, best_t[sel])
        N = rot90(T)
        phi = np.copysign(best_d, ((P - pos) * N).sum(-1))
        phi = np.where(best_d == 0, 0.0, phi)
        return _mask_failed(Projection(pos, T, N, kap, phi, best_c, s, best_t), any_conv)

    def sample(self, spacing=None, n=None) -> Projection:
        total = self.lengths.sum()
        out = []
        for c, path in enumerate(self.paths):
            if spacing is not None:
                nc = max(16, int(np.ceil(self.lengths[c] / spacing)))
            else:
                nc = max(16, int(round((n or 1024) * self.lengths[c] / total)))
            tg, S = self._tables[c]
            t = np.interp(np.linspace(0.0, S[-1], nc, endpoint=False), S, tg)
            g0, T, N, k = self._frame(c, t)
            out.append(
                Projection(g0, T, N, k, np.zeros(nc), np.full(nc, c), self._s_of_t(c, t), t)
            )
        return Projection(*(np.concatenate(cols) for cols in zip(*out)))

    def refine_max_curvature(self, component, param_lo, param_hi):
        res = minimize_scalar(
            lambda t: -abs(float(self._kappa_std(component, t))),
            bounds=(param_lo, param_hi),
            method="bounded",
            options={"xatol": 1e-12 * self.paths[component].period},
        )
        return -float(res.fun)


def circle(center=(0.0, 0.0), radius=1.0) -> ParametricCurve:
    return ParametricCurve([CirclePath(center, radius)], kind="circle")


def ellipse(center=(0.0, 0.0), a=2.0, b=1.0) -> ParametricCurve:
    return ParametricCurve([EllipsePath(center, a, b)], kind="ellipse")


def spline(control_points) -> ParametricCurve:
    return ParametricCurve([SplinePath(control_points)], kind="spline")


def union(*curves: ParametricCurve) -> ParametricCurve:
    """Disjoint union of parametric curves as one multi-component boundary."""
    paths = [p for c in curves for p in c.paths]
    kinds = {c.kind for c in curves}
    return ParametricCurve(paths, kind=kinds.pop() if len(kinds) == 1 else "composite")


# --------------------------------------------------------------------------
# implicit curves


def _broadcast(f):
    def g(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), np.broadcast(x, y).shape)

    return g


class ImplicitCurve(BoundaryCurve):
    """Zero set of a defining function ``psi`` (negative inside).

    ``psi(x, y)``, ``grad(x, y) -> (gx, gy)`` and ``hess(x, y) -> (hxx, hxy, hyy)``
    must accept numpy arrays.  Components are extracted with marching squares
    over ``bbox`` and refined onto the zero set; the resulting dense polylines
    seed the constrained Newton projection and provide the arclength lookup.
    """

    kind = "implicit"

    def __init__(self, psi, grad, hess, bbox, resolution=512):
        from skimage.measure import find_contours

        self.psi, self.grad, self.hess = psi, grad, hess
        x0, y0, x1, y1 = map(float, bbox)
        nx = ny = int(resolution)
        xs, ys = np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        Z = np.asarray(psi(X, Y), dtype=float)
        if np.any(Z[0] <= 0) or np.any(Z[-1] <= 0) or np.any(Z[:, 0] <= 0) or np.any(Z[:, -1] <= 0):
            raise DegenerateCurve("the zero set of psi is not enclosed by bbox")
        contours = find_contours(Z, 0.0)
        if not contours:
            raise DegenerateCurve("psi has no zero set inside bbox")
        dx, dy = (x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1)
        target = np.hypot(x1 - x0, y1 - y0) / 4096
        polys = []
        for cont in contours:
            pts = np.column_stack([x0 + cont[:, 0] * dx, y0 + cont[:, 1] * dy])
            if not np.allclose(pts[0], pts[-1]):
                raise DegenerateCurve("open contour in implicit curve")
            pts = pts[:-1]
            pts = self._densify(pts, target)
            pts = self._snap(pts)
            _, T, _, _ = self._frame(pts)
            fwd = (np.roll(pts, -1, axis=0) - pts) * T
            if fwd.sum() < 0:
                pts = pts[::-1].copy()
            polys.append(pts)
        self._polys = polys
        self._cum = []
        lengths = []
        for pts in polys:
            seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
            self._cum.append(np.concatenate([[0.0], np.cumsum(seg)]))
            lengths.append(self._cum[-1][-1])
        self.lengths = np.array(lengths)
        allp = np.vstack(polys)
        gnorm = np.hypot(*self.grad(allp[:, 0], allp[:, 1]))
        if gnorm.min() < 1.0 - 1e-9:
            raise DegenerateCurve(
                f"|grad psi| = {gnorm.min():.3g} < 1 on the zero set; rescale psi"
            )
        lo, hi = allp.min(axis=0), allp.max(axis=0)
        self._bbox = (lo[0], lo[1], hi[0], hi[1])
        kmax = max(np.abs(self._frame(p)[3]).max() for p in polys)
        if kmax > 1.0 / EPS_SING:
            raise DegenerateCurve(f"curvature {kmax:.3g} exceeds 1/eps_sing")
        r_pre = min(1.0 / kmax if kmax > 0 else np.inf, self.diameter)
        self._seeds = []
        for c, pts in enumerate(polys):
            m = int(min(len(pts), max(256, np.ceil(4 * self.lengths[c] / r_pre))))
            idx = np.unique(np.linspace(0, len(pts), m, endpoint=False).astype(int))
            self._seeds.append((idx, pts[idx]))
        self._finish()

    @classmethod
    def from_expression(cls, expr: str, bbox, resolution=512):
        """Build from a sympy-parsable expression in ``x`` and ``y``."""
        import sympy as sp

        x, y = sp.symbols("x y")
        f = sp.sympify(expr, locals={"x": x, "y": y})
        fx, fy = sp.diff(f, x), sp.diff(f, y)
        fxx, fxy, fyy = sp.diff(fx, x), sp.diff(fx, y), sp.diff(fy, y)
        lam = [_broadcast(sp.lambdify((x, y), e, "numpy")) for e in (f, fx, fy, fxx, fxy, fyy)]
        psi = lam[0]

        def grad(a, b):
            return lam[1](a, b), lam[2](a, b)

        def hess(a, b):
            return lam[3](a, b), lam[4](a, b), lam[5](a, b)

        obj = cls(psi, grad, hess, bbox, resolution)
        obj.expression = str(f)
        return obj

    @staticmethod
    def _densify(pts, target):
        nxt = np.roll(pts, -1, axis=0)
        seg = np.linalg.norm(nxt - pts, axis=1)
        keep = seg > 0
        pts, nxt, seg = pts[keep], nxt[keep], seg[keep]
        k = np.maximum(1, np.ceil(seg / target).astype(int))
        out = [pts[i] + (nxt[i] - pts[i]) * (np.arange(k[i])[:, None] / k[i]) for i in range(len(pts))]
        return np.vstack(out)

    def _snap(self, pts, iters=8):
        for _ in range(iters):
            v = self.psi(pts[:, 0], pts[:, 1])
            gx, gy = self.grad(pts[:, 0], pts[:, 1])
            g2 = gx * gx + gy * gy
            pts = pts - (v / g2)[:, None] * np.column_stack([gx, gy])
        return pts

    def _frame(self, pts):
        gx, gy = self.grad(pts[:, 0], pts[:, 1])
        hxx, hxy, hyy = self.hess(pts[:, 0], pts[:, 1])
        gn = np.hypot(gx, gy)
        with np.errstate(invalid="ignore", divide="ignore"):
            N = np.column_stack([gx, gy]) / gn[:, None]
            div_n = (hxx * gy * gy - 2 * hxy * gx * gy + hyy * gx * gx) / gn**3
        T = np.column_stack([N[:, 1], -N[:, 0]])
        return pts, T, N, -div_n

    def inside(self, points):
        P = _as_points(points)
        return self.psi(P[:, 0], P[:, 1]) < 0

    def _locate(self, c, xi, j):
        poly, cum = self._polys[c], self._cum[c]
        m = len(poly)
        best_s = np.zeros(len(xi))
        best_d = np.full(len(xi), np.inf)
        for a_idx in (np.mod(j - 1, m), j):
            a = poly[a_idx]
            b = poly[np.mod(a_idx + 1, m)]
            ab = b - a
            w = np.clip(((xi - a) * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
            q = a + w[:, None] * ab
            d = np.linalg.norm(xi - q, axis=1)
            s = cum[a_idx] + w * np.linalg.norm(ab, axis=1)
            better = d < best_d
            best_d = np.where(better, d, best_d)
            best_s = np.where(better, s, best_s)
        return np.mod(best_s / self.lengths[c], 1.0)

    def project(self, points, strict=True) -> Projection:
        P = _as_points(points)
        n = len(P)
        tol = self.tol_proj
        best_d = np.full(n, np.inf)
        best_xi = np.zeros((n, 2))
        best_c = np.zeros(n, dtype=int)
        best_j = np.zeros(n, dtype=int)
        for c, (seed_idx, seeds) in enumerate(self._seeds):
            d2 = ((P[:, None, :] - seeds[None, :, :]) ** 2).sum(-1)
            idx, dval = _local_minima_candidates(d2, _N_CANDIDATES)
            live = np.isfinite(dval).ravel()
            rows = np.repeat(np.arange(n), idx.shape[1])
            xi = seeds[idx.ravel()].copy()
            conv = np.zeros(len(rows), dtype=bool)
            xi[live], conv[live] = self._lagrange_newton(P[rows[live]], xi[live], tol)
            jj = self._nearest_vertex(c, xi, seed_idx[idx.ravel()])
            dist = np.where(conv, np.linalg.norm(xi - P[rows], axis=1), np.inf).reshape(n, -1)
            k = np.argmin(dist, axis=1)
            dk = dist[np.arange(n), k]
            better = dk < best_d
            best_d = np.where(better, dk, best_d)
            best_xi[better] = xi.reshape(n, -1, 2)[np.arange(n), k][better]
            best_c[better] = c
            best_j[better] = jj.reshape(n, -1)[np.arange(n), k][better]
        ok = np.isfinite(best_d)
        if strict and not ok.all():
            raise ProjectionDidNotConverge(f"closest point solve failed at {P[~ok][0]}")
        _, T, N, kap = self._frame(best_xi)
        psi_p = self.psi(P[:, 0], P[:, 1])
        phi = np.where(best_d == 0, 0.0, np.copysign(best_d, psi_p))
        s = np.empty(n)
        for c in range(len(self._polys)):
            sel = best_c == c
            if sel.any():
                s[sel] = self._locate(c, best_xi[sel], best_j[sel])
        return _mask_failed(Projection(best_xi, T, N, kap, phi, best_c, s, best_j.astype(float)), ok)

    def _nearest_vertex(self, c, xi, j0):
        """Dense polyline vertex nearest to each foot, searched around seed ``j0``."""
        poly = self._polys[c]
        m = len(poly)
        half = int(np.ceil(m / len(self._seeds[c][0]))) + 2
        win = np.mod(j0[:, None] + np.arange(-half, half + 1)[None, :], m)
        d2 = ((poly[win] - xi[:, None, :]) ** 2).sum(-1)
        return win[np.arange(len(xi)), np.argmin(d2, axis=1)]

    def _lagrange_newton(self, P, xi, tol):
        step_cap = 0.25 * self.lengths.min() / 16
        g = np.column_stack(self.grad(xi[:, 0], xi[:, 1]))
        lam = ((P - xi) * g).sum(-1) / (g * g).sum(-1)
        conv = np.zeros(len(P), dtype=bool)
        polished = np.zeros(len(P), dtype=bool)
        for _ in range(_MAX_NEWTON + 1):
            x, y = xi[:, 0], xi[:, 1]
            v = self.psi(x, y)
            g = np.column_stack(self.grad(x, y))
            gn = np.linalg.norm(g, axis=1)
            r = P - xi
            tang = np.abs(cross2(r, g)) / gn
            conv = (tang <= tol) & (np.abs(v) / gn <= tol)
            if polished.all():
                break
            hxx, hxy, hyy = self.hess(x, y)
            J = np.zeros((len(P), 3, 3))
            J[:, 0, 0] = 1 + lam * hxx
            J[:, 0, 1] = J[:, 1, 0] = lam * hxy
            J[:, 1, 1] = 1 + lam * hyy
            J[:, 0, 2] = J[:, 2, 0] = g[:, 0]
            J[:, 1, 2] = J[:, 2, 1] = g[:, 1]
            F = np.column_stack([-r[:, 0] + lam * g[:, 0], -r[:, 1] + lam * g[:, 1], v])
            try:
                delta = np.linalg.solve(J, -F[..., None])[..., 0]
            except np.linalg.LinAlgError:
                delta = np.zeros_like(F)
                for i in range(len(F)):
                    delta[i] = np.linalg.lstsq(J[i], -F[i], rcond=None)[0]
            # converged rows take exactly one more (polishing) step
            delta = np.where(polished[:, None], 0.0, delta)
            polished |= conv
            move = np.linalg.norm(delta[:, :2], axis=1)
            cap = np.where(move > step_cap, step_cap / np.maximum(move, 1e-300), 1.0)
            delta = np.where(np.isfinite(delta), delta, 0.0) * cap[:, None]
            xi = xi + delta[:, :2]
            lam = lam + delta[:, 2]
        return xi, conv

    def sample(self, spacing=None, n=None) -> Projection:
        total = self.lengths.sum()
        out = []
        for c, poly in enumerate(self._polys):
            m = len(poly)
            if spacing is not None:
                want = max(16, int(np.ceil(self.lengths[c] / spacing)))
            else:
                want = max(16, int(round((n or 1024) * self.lengths[c] / total)))
            idx = np.unique(np.linspace(0, m, min(want, m), endpoint=False).astype(int))
            pts, T, N, k = self._frame(poly[idx])
            s = self._cum[c][idx] / self.lengths[c]
            out.append(
                Projection(pts, T, N, k, np.zeros(len(idx)), np.full(len(idx), c), s, idx.astype(float))
            )
        return Projection(*(np.concatenate(cols) for cols in zip(*out)))


# --------------------------------------------------------------------------


class NegatedCurve(BoundaryCurve):
    """The same point set with phi replaced by -phi (inside and outside swapped)."""

    def __init__(self, base: BoundaryCurve):
        self.base = base
        self.kind = base.kind
        self.lengths = base.lengths
        self._bbox = base._bbox
        self.reach = base.reach

    @staticmethod
    def _flip(pr: Projection) -> Projection:
        return Projection(
            pr.position, -pr.tangent, -pr.normal, -pr.curvature, -pr.phi,
            pr.component, np.mod(1.0 - pr.s, 1.0), pr.param,
        )

    def project(self, points, strict=True):
        return self._flip(self.base.project(points, strict=strict))

    def sample(self, spacing=None, n=None):
        return self._flip(self.base.sample(spacing=spacing, n=n))

    def inside(self, points):
        return ~self.base.inside(points)

    def refine_max_curvature(self, component, param_lo, param_hi):
        return self.base.refine_max_curvature(component, param_lo, param_hi)


def negated(curve: BoundaryCurve) -> BoundaryCurve:
    if isinstance(curve, NegatedCurve):
        return curve.base
    return NegatedCurve(curve)


# --------------------------------------------------------------------------
# scalar operations


def signed_distance(curve: BoundaryCurve, p) -> float:
    """Signed distance: negative inside, positive outside, zero on the curve."""
    return float(curve.project(p).phi[0])


def _point(pr: Projection, i=0) -> CurvePoint:
    return CurvePoint(
        position=pr.position[i].copy(),
        tangent=pr.tangent[i].copy(),
        normal=pr.normal[i].copy(),
        signed_curvature=float(pr.curvature[i]),
        component_id=int(pr.component[i]),
        arclength_param=float(pr.s[i]),
    )


def closest_point(curve: BoundaryCurve, p, check_tube=True) -> CurvePoint:
    """Foot of ``p`` on the curve.

    Raises
    ------
    OutsideTube
        If ``|phi(p)| >= r_n`` and ``check_tube`` is set; the foot need not be
        unique there.
    """
    pr = curve.project(p)
    if check_tube and abs(pr.phi[0]) >= curve.reach.r_n:
        raise OutsideTube(f"|phi| = {abs(pr.phi[0]):.6g} >= r_n = {curve.reach.r_n:.6g}")
    return _point(pr)


def signed_curvature(curve: BoundaryCurve, xi) -> float:
    if isinstance(xi, CurvePoint):
        return xi.signed_curvature
    return float(curve.project(xi).curvature[0])


def _grad_pi_from(pr: Projection):
    fac = 1.0 - pr.phi * pr.curvature
    if np.any(np.abs(pr.phi * pr.curvature) >= 1.0 - EPS_SING):
        raise CurvatureSingularity("|phi * kappa_s| >= 1 - eps_sing")
    TT = pr.tangent[:, :, None] * pr.tangent[:, None, :]
    return TT / fac[:, None, None]


def grad_pi(curve: BoundaryCurve, p) -> np.ndarray:
    """Jacobian of the closest point map, ``T (x) T / (1 - phi kappa_s)``."""
    return _grad_pi_from(curve.project(p))[0]


def hess_phi(curve: BoundaryCurve, p) -> np.ndarray:
    """Hessian of the signed distance, ``-kappa_s grad_pi``."""
    pr = curve.project(p)
    return -pr.curvature[0] * _grad_pi_from(pr)[0]


def grad_pi_many(curve: BoundaryCurve, points) -> np.ndarray:
    return _grad_pi_from(curve.project(points))


def estimate_reach(curve: BoundaryCurve, n: int = 512, method: str | None = None) -> ReachEstimate:
    """Tube radius within which phi and the projection are single valued.

    Analytic for a single circle or ellipse.  Otherwise the minimum radius of
    curvature over ``n`` samples, capped by half the smallest gap between
    components and by a bisection probe along both normal rays of every
    sample (the largest offset whose foot is still the sample point).
    """
    if n < 256:
        raise ValueError("estimate_reach needs n >= 256")
    if method in (None, "analytic"):
        r = curve._analytic_reach()
        if r is not None:
            return ReachEstimate(float(r), "analytic", 0)
        if method == "analytic":
            raise ValueError(f"no analytic reach for kind {curve.kind!r}")
    smp = curve.sample(n=n)
    dense = curve.sample(n=max(n, 8192))
    kap = np.abs(dense.curvature)
    if kap.max() > 1.0 / EPS_SING:
        raise DegenerateCurve(f"sampled curvature {kap.max():.3g} exceeds 1/eps_sing")
    kmax = kap.max()
    i = int(np.argmax(kap))
    c = int(dense.component[i])
    same = np.flatnonzero(dense.component == c)
    k = int(np.searchsorted(same, i))
    prm = dense.param[same]
    if len(same) > 2 and 0 < k < len(same) - 1:
        refined = curve.refine_max_curvature(c, prm[k - 1], prm[k + 1])
        if refined is not None:
            kmax = max(kmax, refined)
    r_curv = 1.0 / kmax if kmax > 0 else np.inf
    sep = np.inf
    comps = smp.component
    for a in range(curve.n_components):
        for b in range(a + 1, curve.n_components):
            A, B = smp.position[comps == a], smp.position[comps == b]
            sep = min(sep, np.sqrt(((A[:, None] - B[None]) ** 2).sum(-1)).min())
    hi_cap = min(r_curv, 0.5 * sep, curve.diameter)
    m = len(smp)
    base = np.vstack([smp.position, smp.position])
    dirs = np.vstack([smp.normal, -smp.normal])
    comp = np.concatenate([comps, comps])
    lo = np.zeros(2 * m)
    hi = np.full(2 * m, hi_cap)
    foot_tol = 1e-7 * curve.diameter
    for _ in range(24):
        mid = 0.5 * (lo + hi)
        pr = curve.project(base + mid[:, None] * dirs, strict=False)
        with np.errstate(invalid="ignore"):
            same = (pr.component == comp) & (np.linalg.norm(pr.position - base, axis=1) <= foot_tol)
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    r_probe = lo.min()
    r_n = float(min(r_curv, 0.5 * sep, r_probe if r_probe < hi_cap * (1 - 1e-6) else np.inf))
    return ReachEstimate(
        r_n, "sampled", m,
        details={"curvature": float(r_curv), "separation": float(0.5 * sep), "probe": float(r_probe)},
    )
