"""Closest point projection restricted to the positive edges: sampling,
Jacobian bounds, distance bounds and a sampled homeomorphism certificate.

The certificate is only as fine as the sampling: a passing report means the
properties held at every sample for ``samples_per_edge = n``, reported as
"certified at resolution n".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve_geometry import CurvePoint, EPS_SING
from .errors import CurvatureSingularity
from .triangulation import edge_key

WIND_TOL = 1e-6
J_CAP = 5.0 / 3.0
J_CAP_TOL = 1e-9
DOT_TOL = 1e-9  # noise floor for comparisons of unit-vector dot products
J_RTOL = 1e-12


def chebyshev_fractions(n: int) -> np.ndarray:
    """``n`` Chebyshev-like points strictly inside (0, 1), increasing."""
    if n < 2:
        raise ValueError("samples_per_edge must be at least 2")
    k = np.arange(n)
    return 0.5 * (1.0 - (n / (n + 1.0)) * np.cos((2 * k + 1) * np.pi / (2 * n)))


@dataclass(frozen=True, eq=False)
class ParamSample:
    x: np.ndarray
    edge: tuple
    owner: int
    pi_x: CurvePoint
    phi_x: float
    J: float
    bound_lo: float
    bound_hi: float
    arclength_param: float


@dataclass(eq=False)
class LoopSamples:
    """Samples of one loop in walking order.

    Edge ``i`` contributes its start vertex (``t = 0``) followed by ``n``
    interior points, so a loop with ``m`` edges has ``m (n + 1)`` rows.  The
    start vertex row is evaluated one-sided, with edge ``i``'s direction and
    owner.
    """

    loop_id: int
    n: int
    edge_index: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    owner: np.ndarray
    t: np.ndarray  # fraction along the edge
    x: np.ndarray
    foot: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    phi: np.ndarray
    component: np.ndarray
    s: np.ndarray
    J: np.ndarray
    bound_lo: np.ndarray
    bound_hi: np.ndarray

    def __len__(self):
        return len(self.t)

    @property
    def interior(self) -> np.ndarray:
        return self.t > 0

    def sample(self, i: int) -> ParamSample:
        pt = CurvePoint(
            position=self.foot[i].copy(),
            tangent=self.tangent[i].copy(),
            normal=self.normal[i].copy(),
            signed_curvature=float(self.curvature[i]),
            component_id=int(self.component[i]),
            arclength_param=float(self.s[i]),
        )
        return ParamSample(
            x=self.x[i].copy(),
            edge=(int(self.v0[i]), int(self.v1[i])),
            owner=int(self.owner[i]),
            pi_x=pt,
            phi_x=float(self.phi[i]),
            J=float(self.J[i]),
            bound_lo=float(self.bound_lo[i]),
            bound_hi=float(self.bound_hi[i]),
            arclength_param=float(self.s[i]),
        )

    def __iter__(self):
        return (self.sample(i) for i in range(len(self)))


def jacobian_bounds(row):
    """``(lo, hi)`` of the edge Jacobian for a condition report row.

    ``lo`` is NaN when the angle ``beta_K`` is undefined and ``hi`` infinite
    when ``M_K h_K >= 1``.
    """
    Mh = row.M_K * row.h_K
    lo = math.sin(math.radians(row.beta_K - row.theta_K)) / (1.0 + Mh)
    hi = 1.0 / (1.0 - Mh) if Mh < 1.0 else math.inf
    return lo, hi


def _edge_jacobian(pr, U):
    fac = 1.0 - pr.phi * pr.curvature
    if np.any(np.abs(pr.phi * pr.curvature) >= 1.0 - EPS_SING):
        raise CurvatureSingularity("|phi * kappa_s| >= 1 - eps_sing on a positive edge")
    return np.abs((pr.tangent * U).sum(-1)) / np.abs(fac)


def jacobian(curve, tri, edge, owner: int, x, row) -> ParamSample:
    """Length stretch of the projection along edge ``(p, q)`` at ``x``.

    ``J = |T . U_pq| / |1 - phi kappa_s|`` with the bounds of ``row``.
    """
    p, q = edge
    P, Q = tri.vertices[p], tri.vertices[q]
    U = (Q - P) / np.linalg.norm(Q - P)
    x = np.asarray(x, dtype=float).reshape(1, 2)
    pr = curve.project(x)
    J = float(_edge_jacobian(pr, U[None])[0])
    lo, hi = jacobian_bounds(row)
    return ParamSample(
        x=x[0],
        edge=(int(p), int(q)),
        owner=int(owner),
        pi_x=CurvePoint(
            position=pr.position[0],
            tangent=pr.tangent[0],
            normal=pr.normal[0],
            signed_curvature=float(pr.curvature[0]),
            component_id=int(pr.component[0]),
            arclength_param=float(pr.s[0]),
        ),
        phi_x=float(pr.phi[0]),
        J=J,
        bound_lo=lo,
        bound_hi=hi,
        arclength_param=float(pr.s[0]),
    )


def sample_loop(curve, tri, loop, n: int, report) -> LoopSamples:
    """Project ``n`` interior points per edge plus each loop vertex once."""
    frac = np.concatenate([[0.0], chebyshev_fractions(n)])
    cyc = np.asarray(loop.vertex_cycle)
    m = len(cyc)
    v0, v1 = cyc, np.roll(cyc, -1)
    P, Q = tri.vertices[v0], tri.vertices[v1]
    X = P[:, None, :] + frac[None, :, None] * (Q - P)[:, None, :]
    X = X.reshape(-1, 2)
    U = (Q - P) / np.linalg.norm(Q - P, axis=1)[:, None]
    pr = curve.project(X)
    rep = np.repeat
    k = n + 1
    owner = np.asarray(loop.edge_owners)
    J = _edge_jacobian(pr, rep(U, k, axis=0))
    bounds = np.array([jacobian_bounds(report.row(int(o))) for o in owner]).reshape(m, 2)
    return LoopSamples(
        loop_id=loop.loop_id,
        n=n,
        edge_index=rep(np.arange(m), k),
        v0=rep(v0, k),
        v1=rep(v1, k),
        owner=rep(owner, k),
        t=np.tile(frac, m),
        x=X,
        foot=pr.position,
        tangent=pr.tangent,
        normal=pr.normal,
        curvature=pr.curvature,
        phi=pr.phi,
        component=pr.component,
        s=pr.s,
        J=J,
        bound_lo=rep(bounds[:, 0], k),
        bound_hi=rep(bounds[:, 1], k),
    )


def sample_loops(curve, tri, loops, n: int, report) -> list:
    return [sample_loop(curve, tri, lp, n, report) for lp in loops]


# --------------------------------------------------------------------------
# angle and distance estimates on positively cut triangles


@dataclass
class InequalityTally:
    """Violation count and worst offender of one inequality family."""

    name: str
    checked: int = 0
    violations: int = 0
    worst_margin: float = math.inf  # min over checks of (rhs - lhs); < 0 means violated
    worst_triangle: int = -1

    def add(self, margin: np.ndarray, tri_ids: np.ndarray, slack: float = 0.0):
        margin = np.atleast_1d(np.asarray(margin, dtype=float))
        if margin.size == 0:
            return
        bad = ~(margin >= -slack)  # NaN counts as a violation
        self.checked += margin.size
        self.violations += int(bad.sum())
        score = np.where(np.isnan(margin), -np.inf, margin)
        i = int(np.argmin(score))
        if score[i] < self.worst_margin:
            self.worst_margin = float(score[i])
            self.worst_triangle = int(np.broadcast_to(tri_ids, margin.shape)[i])

    @property
    def ok(self) -> bool:
        return self.violations == 0


@dataclass
class EstimateReport:
    normal_alignment: InequalityTally
    taylor: InequalityTally
    proximal_lower: InequalityTally
    proximal_vertex: InequalityTally
    failing_triangles: list = field(default_factory=list)

    @property
    def tallies(self):
        return [self.normal_alignment, self.taylor, self.proximal_lower, self.proximal_vertex]

    @property
    def ok(self) -> bool:
        return all(t.ok for t in self.tallies)


def edge_estimate_checks(curve, tri, cls, report, samples) -> EstimateReport:
    """Angle and distance estimates at every sample of every positive edge.

    For triangle ``K`` with positive edge ``ab`` (``a`` proximal), opposite
    vertex ``c`` and ``C = C_K^h``:

    * ``-3/2 C h_K <= N(pi(x)) . U_ab <= cos(beta_K - theta_K)``
    * ``|phi(y) - (y - pi(x)) . N(pi(x))| <= C d(x, y)^2 / 2`` for ``y`` in ``{a, b, c}``
    * ``phi(x) >= -2 C min(d(a, x), d(b, x)) d(a, b)``
    * ``N(pi(a)) . U_ab >= -C d(a, b) / 2``

    Comparisons carry a noise-floor slack: ``DOT_TOL`` for dot products and
    the projection tolerance for lengths.
    """
    curve = cls.curve
    tol = curve.tol_proj
    V = tri.vertices
    phi_v = cls.vertex_phi
    out = EstimateReport(
        InequalityTally("normal_alignment"),
        InequalityTally("taylor"),
        InequalityTally("proximal_lower"),
        InequalityTally("proximal_vertex"),
    )
    failing = set()

    def track(tally, margin, k, slack):
        before = tally.violations
        tally.add(margin, np.array(k), slack)
        if tally.violations > before:
            failing.add(int(k))

    for ls in samples:
        for e in range(int(ls.edge_index.max()) + 1 if len(ls) else 0):
            sel = ls.edge_index == e
            k = int(ls.owner[sel][0])
            cut = cls.cut(k)
            row = report.row(k)
            a = cut.proximal_vertex
            b = cut.distal_vertex
            c = cut.opposite_vertex
            A, B = V[a], V[b]
            dab = float(np.linalg.norm(B - A))
            U = (B - A) / dab
            C = row.C_Kh
            X = ls.x[sel]
            Nn = ls.normal[sel]
            foot = ls.foot[sel]
            ph = ls.phi[sel]
            nu = Nn @ U
            upper = math.cos(math.radians(row.beta_K - row.theta_K))
            track(out.normal_alignment, nu + 1.5 * C * row.h_K, k, DOT_TOL)
            track(out.normal_alignment, upper - nu, k, DOT_TOL)
            for y in (a, b, c):
                Y = V[y]
                d = np.linalg.norm(X - Y, axis=1)
                lhs = np.abs(phi_v[y] - ((Y - foot) * Nn).sum(-1))
                track(out.taylor, 0.5 * C * d**2 - lhs, k, 4 * tol)
            dmin = np.minimum(np.linalg.norm(X - A, axis=1), np.linalg.norm(X - B, axis=1))
            track(out.proximal_lower, ph + 2.0 * C * dmin * dab, k, tol)

    for cut in cls.cut_triangles:
        k = cut.triangle
        a, b = cut.proximal_vertex, cut.distal_vertex
        A, B = V[a], V[b]
        dab = float(np.linalg.norm(B - A))
        Na = curve.project(A).normal[0]
        track(out.proximal_vertex, Na @ ((B - A) / dab) + 0.5 * report.row(k).C_Kh * dab, k, DOT_TOL)
    out.failing_triangles = sorted(failing)
    return out


# --------------------------------------------------------------------------
# homeomorphism certificate


@dataclass
class LoopVerification:
    loop_id: int
    component: int
    n_edges: int
    n_samples: int
    injectivity_ok: bool
    winding: float  # total wrapped arclength increment, should be 1
    min_step: float
    surjectivity_ok: bool
    max_gap: float
    gap_tol: float
    jacobian_ok: bool
    j_min: float
    j_max: float
    jacobian_violations: int
    phi_bounds_ok: bool
    phi_violations: int
    estimates_ok: bool

    @property
    def ok(self) -> bool:
        return (
            self.injectivity_ok
            and self.surjectivity_ok
            and self.jacobian_ok
            and self.phi_bounds_ok
            and self.estimates_ok
        )


@dataclass
class VerificationReport:
    loops: list
    component_match: dict  # loop id -> curve component id
    component_bijection: bool
    unmatched_components: list
    conditions_ok: bool
    estimates: EstimateReport
    samples_per_edge: int
    degree_ok: bool = True

    @property
    def global_pass(self) -> bool:
        return bool(
            self.conditions_ok
            and self.degree_ok
            and self.component_bijection
            and self.loops
            and all(lv.ok for lv in self.loops)
            and self.estimates.ok
        )

    @property
    def status(self) -> str:
        if self.global_pass:
            return f"certified at resolution n={self.samples_per_edge}"
        return f"not certified at resolution n={self.samples_per_edge}"

    def summary_lines(self) -> list:
        out = [self.status]
        out.append(f"conditions: {'pass' if self.conditions_ok else 'FAIL'}")
        out.append(f"loops: {len(self.loops)}  components matched: {self.component_match}")
        if not self.component_bijection:
            out.append(f"component match is not a bijection; unmatched components {self.unmatched_components}")
        for lv in self.loops:
            out.append(
                f"loop {lv.loop_id}: component {lv.component} edges {lv.n_edges} samples {lv.n_samples} "
                f"winding {lv.winding:.12f} min_step {lv.min_step:.3e} "
                f"max_gap {lv.max_gap:.4e} (tol {lv.gap_tol:.4e}) "
                f"J [{lv.j_min:.6f}, {lv.j_max:.6f}] "
                f"injective={lv.injectivity_ok} surjective={lv.surjectivity_ok} "
                f"jacobian={lv.jacobian_ok} phi_bounds={lv.phi_bounds_ok} estimates={lv.estimates_ok}"
            )
        for t in self.estimates.tallies:
            out.append(
                f"{t.name}: {t.checked} checks, {t.violations} violations, "
                f"worst margin {t.worst_margin:.3e} (triangle {t.worst_triangle})"
            )
        return out


def _wrapped_steps(s):
    ds = np.roll(s, -1) - s
    return (ds + 0.5) % 1.0 - 0.5


def verify_homeomorphism(curve, tri, cls, report, loops, samples, estimates=None) -> VerificationReport:
    """Sampled certificate that the projection maps each loop onto one curve
    component, monotonically and exactly once around.

    Never raises on a failed property; every outcome is a flag in the report.
    """
    curve = cls.curve
    tol = curve.tol_proj
    if estimates is None:
        estimates = edge_estimate_checks(curve, tri, cls, report, samples)
    bad_tris = set(estimates.failing_triangles)
    results = []
    match = {}
    for lp, ls in zip(loops, samples):
        comps, counts = np.unique(ls.component, return_counts=True)
        comp = int(comps[np.argmax(counts)])
        match[lp.loop_id] = comp
        single = len(comps) == 1
        ds = _wrapped_steps(ls.s)
        wind = float(ds.sum())
        inj = bool(single and np.all(ds > 0) and abs(wind - 1.0) <= WIND_TOL)
        h_max = float(tri.h[np.asarray(lp.edge_owners)].max())
        gap_tol = 3.0 * h_max / float(curve.lengths[comp])
        max_gap = float(np.abs(ds).max())
        surj = bool(single and max_gap < gap_tol)

        inner = ls.interior
        J, lo, hi = ls.J, ls.bound_lo, ls.bound_hi
        j_ok = (lo > 0) & (J >= lo * (1 - J_RTOL)) & (J <= hi * (1 + J_RTOL)) & (J <= J_CAP + J_CAP_TOL)
        j_ok &= hi <= J_CAP + J_CAP_TOL
        jv = int((~j_ok[inner]).sum())

        rows = [report.row(int(o)) for o in ls.owner]
        h = np.array([r.h_K for r in rows])
        C = np.array([r.C_Kh for r in rows])
        ph = ls.phi
        p_ok = (ph > -C * h**2 - tol) & (ph <= h + tol) & (ph > -h / math.sqrt(6.0))
        pv = int((~p_ok).sum())
        results.append(
            LoopVerification(
                loop_id=lp.loop_id,
                component=comp,
                n_edges=lp.n_edges,
                n_samples=len(ls),
                injectivity_ok=inj,
                winding=wind,
                min_step=float(ds.min()),
                surjectivity_ok=surj,
                max_gap=max_gap,
                gap_tol=gap_tol,
                jacobian_ok=jv == 0,
                j_min=float(J[inner].min()),
                j_max=float(J[inner].max()),
                jacobian_violations=jv,
                phi_bounds_ok=pv == 0,
                phi_violations=pv,
                estimates_ok=not (bad_tris & set(int(o) for o in lp.edge_owners)),
            )
        )
    used = list(match.values())
    unmatched = [c for c in range(curve.n_components) if c not in used]
    bij = len(set(used)) == len(used) == curve.n_components
    return VerificationReport(
        loops=results,
        component_match=match,
        component_bijection=bool(bij),
        unmatched_components=unmatched,
        conditions_ok=report.all_pass,
        estimates=estimates,
        samples_per_edge=samples[0].n if samples else 0,
    )


def positive_edge_set(loops) -> set:
    out = set()
    for lp in loops:
        out |= {edge_key(a, b) for a, b in lp.edges()}
    return out
