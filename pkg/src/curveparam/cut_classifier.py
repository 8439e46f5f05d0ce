"""Positively cut triangles, positive edges and the per-triangle mesh conditions.

A triangle is positively cut when the signed distance is nonnegative at
exactly two of its vertices; the edge joining those two vertices is its
positive edge.  Classification only looks at vertex signs, never at
curve/mesh intersections.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .curve_geometry import BoundaryCurve, negated
from .errors import (
    AdjacentAngleUndefinedWarning,
    InvariantViolation,
    NotImmersed,
    SharedPositiveEdgeConflict,
)
from .triangulation import Triangulation, edge_key

ANGLE_TIE_TOL = 1e-12  # degrees
EDGE_PROBES = 64


@dataclass(frozen=True)
class CutTriangle:
    triangle: int
    positive_edge: tuple  # sorted vertex pair
    opposite_vertex: int
    proximal_vertex: int
    conditioning_angle: float  # degrees
    adjacent_angle: float | None  # degrees, None when undefined
    vertex_phis: tuple  # phi at the triangle's vertices, connectivity order

    @property
    def distal_vertex(self) -> int:
        a, b = self.positive_edge
        return b if a == self.proximal_vertex else a


@dataclass
class CutClassification:
    """Vertex-sign census of a triangulation against a curve.

    ``curve`` is the curve actually used for signs, i.e. the negated curve in
    negative-edge mode; downstream code must use it rather than the input.
    """

    curve: BoundaryCurve
    tri: Triangulation
    mode: str
    vertex_phi: np.ndarray
    cut_triangles: list
    positive_edges: dict  # edge key -> owner triangle id
    conflicts: list = field(default_factory=list)

    def __post_init__(self):
        self._by_tri = {c.triangle: c for c in self.cut_triangles}

    def cut(self, k: int) -> CutTriangle:
        return self._by_tri[k]

    def is_cut(self, k: int) -> bool:
        return k in self._by_tri

    @property
    def cut_ids(self):
        return [c.triangle for c in self.cut_triangles]

    def to_dict(self):
        return {
            "mode": self.mode,
            "n_vertices": int(self.tri.n_vertices),
            "n_triangles": int(self.tri.n_triangles),
            "cut_triangles": [
                {
                    "triangle": c.triangle,
                    "positive_edge": list(c.positive_edge),
                    "opposite_vertex": c.opposite_vertex,
                    "proximal_vertex": c.proximal_vertex,
                    "conditioning_angle": c.conditioning_angle,
                    "adjacent_angle": c.adjacent_angle,
                    "vertex_phis": list(c.vertex_phis),
                }
                for c in self.cut_triangles
            ],
            "positive_edges": [[a, b, k] for (a, b), k in sorted(self.positive_edges.items())],
            "conflicts": [[list(e), list(o)] for e, o in self.conflicts],
        }


def check_immersion(curve: BoundaryCurve, tri: Triangulation, spacing=None):
    """Raise :class:`NotImmersed` unless the curve lies in the mesh interior."""
    if spacing is None:
        spacing = 0.25 * float(tri.h.min()) if tri.n_triangles else curve.diameter / 256
    smp = curve.sample(spacing=spacing)
    loc = tri.locate(smp.position)
    if np.any(loc < 0):
        p = smp.position[np.flatnonzero(loc < 0)[0]]
        raise NotImmersed(f"curve point {p} is outside the triangulated region")
    bnd = tri.boundary_edges()
    if bnd:
        E = np.array(bnd)
        A, B = tri.vertices[E[:, 0]], tri.vertices[E[:, 1]]
        AB = B - A
        X = smp.position
        w = np.clip(((X[:, None] - A[None]) * AB[None]).sum(-1) / (AB * AB).sum(-1), 0, 1)
        d = np.linalg.norm(X[:, None] - (A[None] + w[..., None] * AB[None]), axis=-1)
        if d.min() <= 0.0:
            raise NotImmersed("curve touches the boundary of the triangulated region")


def _edge_meets_curve(curve, tri, edges, phi):
    """e ∩ Γ ≠ ∅ for each positive edge: zero endpoint or a nonpositive probe."""
    if not edges:
        return np.zeros(0, dtype=bool)
    E = np.array(edges)
    t = np.linspace(0.0, 1.0, EDGE_PROBES)
    A, B = tri.vertices[E[:, 0]], tri.vertices[E[:, 1]]
    X = A[:, None, :] + t[None, :, None] * (B - A)[:, None, :]
    ph = curve.project(X.reshape(-1, 2)).phi.reshape(len(E), EDGE_PROBES)
    zero_end = (phi[E[:, 0]] == 0) | (phi[E[:, 1]] == 0)
    return zero_end | (ph.min(axis=1) <= curve.tol_proj)


def classify(
    curve: BoundaryCurve,
    tri: Triangulation,
    mode: str = "positive",
    strict: bool = True,
    immersion: bool = True,
) -> CutClassification:
    """Find positively cut triangles, their positive edges, proximal vertices
    and conditioning/adjacent angles.

    Parameters
    ----------
    mode : {"positive", "negative"}
        ``"negative"`` classifies with ``-phi``.
    strict : bool
        Raise :class:`SharedPositiveEdgeConflict` when two positively cut
        triangles share their positive edge; otherwise record it in
        ``conflicts``.
    """
    if mode not in ("positive", "negative"):
        raise ValueError(f"mode must be 'positive' or 'negative', got {mode!r}")
    eff = negated(curve) if mode == "negative" else curve
    if immersion:
        check_immersion(eff, tri)
    phi = eff.project(tri.vertices).phi if tri.n_vertices else np.zeros(0)
    nonneg = phi >= 0
    C = tri.triangles
    counts = nonneg[C].sum(axis=1) if len(C) else np.zeros(0, dtype=int)
    cut_ids = np.flatnonzero(counts == 2)

    pending = []
    owners: dict = {}
    conflicts = []
    for k in cut_ids.tolist():
        row = C[k].tolist()
        pos = [v for v in row if nonneg[v]]
        (r,) = [v for v in row if not nonneg[v]]
        p, q = pos
        if phi[p] != phi[q]:
            prox = p if phi[p] < phi[q] else q
        else:
            ap, aq = tri.angle_at(k, p), tri.angle_at(k, q)
            if abs(ap - aq) > ANGLE_TIE_TOL:
                prox = p if ap < aq else q
            else:
                prox = min(p, q)
        key = edge_key(p, q)
        if key in owners:
            conflicts.append((key, (owners[key], k)))
        else:
            owners[key] = k
        pending.append((k, key, r, prox))

    if conflicts and strict:
        raise SharedPositiveEdgeConflict(*conflicts[0])

    edges = [key for _, key, _, _ in pending]
    meets = _edge_meets_curve(eff, tri, edges, phi)
    cuts = []
    for (k, key, r, prox), hit in zip(pending, meets):
        adj = _adjacent_angle(tri, k, key) if hit else None
        if hit and adj is None:
            warnings.warn(
                f"positive edge {key} of triangle {k} meets the curve on the mesh boundary; "
                "adjacent angle undefined",
                AdjacentAngleUndefinedWarning,
                stacklevel=2,
            )
        cuts.append(
            CutTriangle(
                triangle=k,
                positive_edge=key,
                opposite_vertex=r,
                proximal_vertex=prox,
                conditioning_angle=tri.angle_at(k, prox),
                adjacent_angle=adj,
                vertex_phis=tuple(float(phi[v]) for v in C[k]),
            )
        )
    return CutClassification(
        curve=eff,
        tri=tri,
        mode=mode,
        vertex_phi=phi,
        cut_triangles=cuts,
        positive_edges=dict(sorted(owners.items())),
        conflicts=conflicts,
    )


def _adjacent_angle(tri: Triangulation, k: int, key):
    others = [t for t in tri.edge_map[key] if t != k]
    if not others:
        return None
    (adj,) = others
    return min(tri.angle_at(adj, key[0]), tri.angle_at(adj, key[1]))


def adjacent_angle(curve, tri: Triangulation, cls: CutClassification, k: int):
    """Minimum interior angle of the neighbor across the positive edge of ``k``
    at the edge's endpoints, defined only when the positive edge meets the
    curve and the neighbor exists."""
    cut = cls.cut(k)
    meets = _edge_meets_curve(cls.curve, tri, [cut.positive_edge], cls.vertex_phi)[0]
    return _adjacent_angle(tri, k, cut.positive_edge) if meets else None


# --------------------------------------------------------------------------
# curvature bounds and the four mesh conditions


def _curvature_bounds(curve: BoundaryCurve, tri: Triangulation, tri_ids, spacing=None):
    """``M_K`` for each triangle: max |curvature| over curve samples within
    ``2 h_K`` of a vertex of ``K`` (a superset of the closed ``h_K``-neighborhood),
    refined locally at the maximizing sample."""
    tri_ids = np.asarray(tri_ids, dtype=int)
    if len(tri_ids) == 0:
        return np.zeros(0)
    if spacing is None:
        spacing = min(0.25 * float(tri.h[tri_ids].min()), curve.reach.r_n / 64)
    smp = curve.sample(spacing=spacing)
    kap = np.abs(smp.curvature)
    X = smp.position
    M = np.zeros(len(tri_ids))
    arg = np.full(len(tri_ids), -1)
    chunk = max(1, 4_000_000 // (3 * len(X)))
    for s in range(0, len(tri_ids), chunk):
        ids = tri_ids[s : s + chunk]
        Vk = tri.vertices[tri.triangles[ids]]  # (c, 3, 2)
        d = np.sqrt(((X[None, None] - Vk[:, :, None]) ** 2).sum(-1)).min(axis=1)
        win = d <= 2.0 * tri.h[ids][:, None]
        kk = np.where(win, kap[None], -np.inf)
        j = kk.argmax(axis=1)
        has = win.any(axis=1)
        M[s : s + chunk] = np.where(has, kk[np.arange(len(ids)), j], 0.0)
        arg[s : s + chunk] = np.where(has, j, -1)

    refined = {}
    comp = smp.component
    prm = smp.param
    for i, j in enumerate(arg.tolist()):
        if j < 0:
            continue
        if j not in refined:
            c = comp[j]
            nb = [x for x in (j - 1, j + 1) if 0 <= x < len(prm) and comp[x] == c]
            step = max(abs(prm[x] - prm[j]) for x in nb) if nb else 0.0
            val = None
            if step > 0:
                val = curve.refine_max_curvature(int(c), prm[j] - step, prm[j] + step)
            refined[j] = val
        if refined[j] is not None:
            M[i] = max(M[i], refined[j])
    return M


def amplified_curvature(M, h):
    """``C = M / (1 - M h)``; infinite when ``M h >= 1``."""
    M, h = np.asarray(M, dtype=float), np.asarray(h, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(M * h < 1.0, M / (1.0 - M * h), np.inf)


def curvature_bound(curve: BoundaryCurve, tri: Triangulation, k: int):
    """``(M_K, C_K^h)`` for triangle ``k``."""
    (M,) = _curvature_bounds(curve, tri, [k])
    return float(M), float(amplified_curvature(M, tri.h[k]))


@dataclass(frozen=True)
class ConditionRow:
    triangle: int
    h_K: float
    sigma_K: float
    theta_K: float
    theta_adj: float | None
    M_K: float
    C_Kh: float
    eta_K: float
    beta_K: float  # degrees, NaN when cos(beta) is outside [-1, 1]
    cond_a: bool
    cond_b: bool
    cond_c: bool
    cond_d: bool
    slack_a: float
    slack_b: float
    slack_c: float
    slack_d: float
    value_c: float  # sigma_K C_K^h h_K
    limit_c: float  # min(cos theta_K, sin(theta_K / 2))
    value_d: float  # C_K^h h_K
    limit_d: float  # sin(theta_adj) / 2, inf when undefined

    @property
    def passed(self) -> bool:
        return self.cond_a and self.cond_b and self.cond_c and self.cond_d

    @property
    def conds(self) -> str:
        return "".join(
            ch if ok else "-"
            for ch, ok in zip("abcd", (self.cond_a, self.cond_b, self.cond_c, self.cond_d))
        )


@dataclass
class ConditionReport:
    rows: list
    r_n: float
    components_touched: list  # per curve component: gamma_h nonempty
    conflicts: list = field(default_factory=list)

    def __post_init__(self):
        self._by_tri = {r.triangle: r for r in self.rows}

    def row(self, k: int) -> ConditionRow:
        return self._by_tri[k]

    @property
    def rows_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def gamma_h_nonempty(self) -> bool:
        return all(self.components_touched)

    @property
    def all_pass(self) -> bool:
        return bool(self.rows and self.rows_pass and self.gamma_h_nonempty and not self.conflicts)

    def failing(self, cond=None):
        if cond is None:
            return [r for r in self.rows if not r.passed]
        return [r for r in self.rows if not getattr(r, f"cond_{cond}")]


def check_conditions(curve, tri: Triangulation, cls: CutClassification) -> ConditionReport:
    """Evaluate the four per-triangle mesh conditions and the requirement that
    every curve component has a nonempty preimage among the positive edges.

    Failures are reported, never raised; only a broken invariant raises.
    """
    eff = cls.curve
    r_n = eff.reach.r_n
    ids = cls.cut_ids
    M = _curvature_bounds(eff, tri, ids)
    h = tri.h[ids] if ids else np.zeros(0)
    Ch = amplified_curvature(M, h)
    phi = cls.vertex_phi
    tol = eff.tol_proj
    rows = []
    for i, cut in enumerate(cls.cut_triangles):
        k = cut.triangle
        hk, sk = float(tri.h[k]), float(tri.sigma[k])
        p, q = cut.positive_edge
        eta = (min(phi[p], phi[q]) - phi[cut.opposite_vertex]) / hk
        if not (0.0 < eta <= 1.0 + tol / hk):
            raise InvariantViolation(f"eta_K = {eta} outside (0, 1] for triangle {k}")
        th = cut.conditioning_angle
        Mk, Ck = float(M[i]), float(Ch[i])
        value_c = sk * Ck * hk
        cos_beta = value_c - eta
        beta = math.degrees(math.acos(cos_beta)) if -1.0 <= cos_beta <= 1.0 else math.nan
        limit_c = min(math.cos(math.radians(th)), math.sin(math.radians(th) / 2))
        # positivity of sigma C h is the statement M_K h_K < 1
        cond_c = (Mk * hk < 1.0) and value_c < limit_c
        if cut.adjacent_angle is not None:
            limit_d = 0.5 * math.sin(math.radians(cut.adjacent_angle))
            cond_d = Ck * hk < limit_d
        else:
            limit_d = math.inf
            cond_d = True
        if cond_c and not beta > th:
            raise InvariantViolation(f"beta_K <= theta_K with condition c satisfied (triangle {k})")
        rows.append(
            ConditionRow(
                triangle=k, h_K=hk, sigma_K=sk, theta_K=th, theta_adj=cut.adjacent_angle,
                M_K=Mk, C_Kh=Ck, eta_K=float(eta), beta_K=beta,
                cond_a=hk < r_n, cond_b=th < 90.0, cond_c=bool(cond_c), cond_d=bool(cond_d),
                slack_a=r_n - hk, slack_b=90.0 - th, slack_c=limit_c - value_c,
                slack_d=limit_d - Ck * hk,
                value_c=value_c, limit_c=limit_c, value_d=Ck * hk, limit_d=limit_d,
            )
        )
    touched = [False] * eff.n_components
    if cls.positive_edges:
        E = np.array(list(cls.positive_edges))
        mid = 0.5 * (tri.vertices[E[:, 0]] + tri.vertices[E[:, 1]])
        for c in np.unique(eff.project(mid).component):
            touched[int(c)] = True
    return ConditionReport(rows=rows, r_n=r_n, components_touched=touched, conflicts=list(cls.conflicts))
