"""Acceptance criteria 1-9, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest
from matplotlib.path import Path as MplPath
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import (  # noqa: E402
    ACCEPTANCE_LINES,
    CIRCLE_CENTER,
    ELLIPSE_CENTER,
    blob_points,
)
from curveparam.curve_geometry import circle, ellipse, grad_pi_many, spline, union  # noqa: E402
from curveparam.cut_classifier import check_conditions, classify  # noqa: E402
from curveparam.edge_topology import build_loops, orient_loops  # noqa: E402
from curveparam.parameterization import sample_loops, verify_homeomorphism  # noqa: E402
from curveparam.triangulation import edge_key, generate_equilateral_grid  # noqa: E402

CIRCLE_BOX = (-1.3, -1.3, 1.3, 1.3)
ELLIPSE_BOX = (-2.4, -1.4, 2.4, 1.4)
BLOB_BOX = (-1.4, -1.4, 1.4, 1.4)
LEFT, RIGHT = (-1.5123, 0.0211), (1.5371, -0.0173)


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


def run(curve, tri, n=8, mode="positive"):
    cls = classify(curve, tri, mode=mode)
    rep = check_conditions(cls.curve, tri, cls)
    loops = orient_loops(build_loops(cls), cls.curve, tri.vertices)
    samples = sample_loops(cls.curve, tri, loops, n, rep)
    vr = verify_homeomorphism(cls.curve, tri, cls, rep, loops, samples)
    return cls, rep, loops, samples, vr


def halve_until_pass(curve, box, h=0.2, floor=0.01):
    while h >= floor:
        tri = generate_equilateral_grid(box, h)
        if check_conditions(curve, tri, classify(curve, tri)).all_pass:
            return h, tri
        h /= 2
    raise AssertionError("no passing h above the floor")


def union_find(edges):
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = defaultdict(list)
    for a, b in edges:
        groups[find(a)].append(edge_key(a, b))
    return sorted(sorted(g) for g in groups.values())


def sign_sweep(tri, phi):
    edges = {}
    for k, row in enumerate(tri.triangles.tolist()):
        pos = [v for v in row if phi[v] >= 0]
        if len(pos) == 2:
            edges[edge_key(*pos)] = k
    return edges


# --------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    c = circle(CIRCLE_CENTER, 1.0)
    ok02 = check_conditions(c, t := generate_equilateral_grid(CIRCLE_BOX, 0.2), classify(c, t)).all_pass
    tri = generate_equilateral_grid(CIRCLE_BOX, 0.3)
    rep = check_conditions(c, tri, classify(c, tri))
    dt = time.perf_counter() - t0
    fail_c = rep.failing("c")
    worst = max(r.value_c for r in fail_c) if fail_c else float("nan")
    limit = min(r.limit_c for r in fail_c) if fail_c else float("nan")
    ok = (
        ok02
        and not rep.all_pass
        and bool(fail_c)
        and abs(worst - 0.742) <= 1e-3
        and abs(limit - 0.5) <= 1e-3
        and dt < 1.0
    )
    return ok, f"h=0.2 all pass={ok02}; h=0.3 cond_c fails on {len(fail_c)} rows, sigma C h={worst:.6f} vs {limit:.6f}; {dt:.3f}s"


def criterion_2():
    t0 = time.perf_counter()
    c = circle(CIRCLE_CENTER, 1.0)
    tri = generate_equilateral_grid(CIRCLE_BOX, 0.2)
    cls, rep, loops, samples, vr = run(c, tri, n=8)
    dt = time.perf_counter() - t0
    deg = defaultdict(int)
    for a, b in cls.positive_edges:
        deg[a] += 1
        deg[b] += 1
    (lv,) = vr.loops if len(vr.loops) == 1 else (None,)
    ds = (np.roll(samples[0].s, -1) - samples[0].s + 0.5) % 1.0 - 0.5
    ok = (
        len(loops) == 1
        and set(deg.values()) == {2}
        and lv is not None
        and bool(np.all(ds > 0))
        and abs(ds.sum() - 1.0) <= 1e-6
        and lv.max_gap < lv.gap_tol
        and vr.global_pass
        and dt < 5.0
    )
    return ok, (
        f"{len(loops)} loop, degrees {sorted(set(deg.values()))}, winding {ds.sum():.12f}, "
        f"max gap {lv.max_gap:.3e} < {lv.gap_tol:.3e}, {vr.status}; {dt:.3f}s"
    )


def criterion_3():
    c = circle(CIRCLE_CENTER, 1.0)
    tri = generate_equilateral_grid(CIRCLE_BOX, 0.2)
    cls, rep, loops, samples, vr = run(c, tri, n=32)
    (ls,) = samples
    m = ls.interior
    J, lo, hi = ls.J[m], ls.bound_lo[m], ls.bound_hi[m]
    P, Q = tri.vertices[ls.v0[m]], tri.vertices[ls.v1[m]]
    U = (Q - P) / np.linalg.norm(Q - P, axis=1)[:, None]
    eps = 1e-6 * tri.h[ls.owner[m]][:, None]
    Jfd = np.linalg.norm(c.project(ls.x[m] + eps * U).position - c.project(ls.x[m] - eps * U).position, axis=1) / (2 * eps[:, 0])
    rel = float(np.max(np.abs(J - Jfd) / J))
    inside = bool(np.all((lo <= J) & (J <= hi)))
    ok = len(J) >= 1000 and inside and bool(np.all(lo > 0)) and J.max() <= 5 / 3 + 1e-9 and rel < 1e-3
    return ok, f"{len(J)} interior samples, all in bounds={inside}, min lo={lo.min():.4f}, max J={J.max():.6f}, FD rel err {rel:.2e}"


def _distance_bound_violations(rep, samples):
    bad = total = 0
    for ls in samples:
        rows = [rep.row(int(o)) for o in ls.owner]
        h = np.array([r.h_K for r in rows])
        C = np.array([r.C_Kh for r in rows])
        ok = (-C * h**2 < ls.phi) & (ls.phi <= h) & (ls.phi > -h / math.sqrt(6))
        bad += int((~ok).sum())
        total += len(ok)
    return bad, total


def criterion_4():
    cases = [
        ("circle", circle(CIRCLE_CENTER, 1.0), CIRCLE_BOX, 0.2),
        ("ellipse", ellipse(ELLIPSE_CENTER, 2.0, 1.0), ELLIPSE_BOX, None),
        ("blob", spline(blob_points()), BLOB_BOX, None),
    ]
    parts, ok = [], True
    for name, curve, box, h in cases:
        tri = generate_equilateral_grid(box, h) if h else halve_until_pass(curve, box)[1]
        cls, rep, loops, samples, vr = run(curve, tri, n=16)
        bad, total = _distance_bound_violations(rep, samples)
        ok &= bad == 0 and rep.all_pass
        parts.append(f"{name} {bad}/{total}")
    return ok, "violations " + ", ".join(parts)


def _estimate_violations(tri, cls, rep, samples, noise=1e-12):
    """Direct evaluation of the four angle/distance inequalities."""
    V, phi_v = tri.vertices, cls.vertex_phi
    counts = {"normal": 0, "taylor": 0, "phi_lower": 0, "proximal": 0}
    n = 0
    for ls in samples:
        for i in range(len(ls)):
            cut = cls.cut(int(ls.owner[i]))
            row = rep.row(cut.triangle)
            a, b, c = cut.proximal_vertex, cut.distal_vertex, cut.opposite_vertex
            A, B = V[a], V[b]
            dab = np.linalg.norm(B - A)
            U = (B - A) / dab
            C, h = row.C_Kh, row.h_K
            x, N, foot, ph = ls.x[i], ls.normal[i], ls.foot[i], ls.phi[i]
            nu = N @ U
            upper = math.cos(math.radians(row.beta_K - row.theta_K))
            counts["normal"] += not (-1.5 * C * h - noise <= nu <= upper + noise)
            for y in (a, b, c):
                d = np.linalg.norm(x - V[y])
                counts["taylor"] += not (abs(phi_v[y] - (V[y] - foot) @ N) <= 0.5 * C * d * d + noise)
            dmin = min(np.linalg.norm(x - A), np.linalg.norm(x - B))
            counts["phi_lower"] += not (ph >= -2 * C * dmin * dab - noise)
            n += 1
    for cut in cls.cut_triangles:
        a, b = cut.proximal_vertex, cut.distal_vertex
        A, B = V[a], V[b]
        dab = np.linalg.norm(B - A)
        Na = cls.curve.project(A).normal[0]
        counts["proximal"] += not (Na @ ((B - A) / dab) >= -0.5 * rep.row(cut.triangle).C_Kh * dab - noise)
    return counts, n


def criterion_5():
    circ = circle(CIRCLE_CENTER, 1.0)
    ell = ellipse(ELLIPSE_CENTER, 2.0, 1.0)
    blob = spline(blob_points())
    h_e, tri_e = halve_until_pass(ell, ELLIPSE_BOX)
    h_b, tri_b = halve_until_pass(blob, BLOB_BOX)
    cases = [
        ("circle h=0.2", circ, generate_equilateral_grid(CIRCLE_BOX, 0.2)),
        (f"ellipse h={h_e:g}", ell, tri_e),
        (f"blob h={h_b:g}", blob, tri_b),
    ]
    ok, parts = True, []
    for name, curve, tri in cases:
        cls, rep, loops, samples, vr = run(curve, tri, n=8)
        counts, n = _estimate_violations(tri, cls, rep, samples)
        lib_ok = vr.estimates.ok
        ok &= rep.all_pass and lib_ok and sum(counts.values()) == 0
        parts.append(f"{name}: {n} samples, violations {sum(counts.values())}")
    return ok, "; ".join(parts)


def criterion_6():
    t0 = time.perf_counter()
    e = ellipse(ELLIPSE_CENTER, 2.0, 1.0)
    rng = np.random.default_rng(2024)
    smp = e.sample(n=20000)
    idx = rng.choice(len(smp), 1000, replace=False)
    r_n = e.reach.r_n
    X = smp.position[idx] + rng.uniform(-0.9, 0.9, (1000, 1)) * r_n * smp.normal[idx]
    G = grad_pi_many(e, X)
    pr = e.project(X)
    H = -pr.curvature[:, None, None] * G
    eps = 1e-5 * r_n
    Gfd = np.empty_like(G)
    Hfd = np.empty_like(H)
    for j in range(2):
        d = np.zeros(2)
        d[j] = eps
        p, m = e.project(X + d), e.project(X - d)
        Gfd[:, :, j] = (p.position - m.position) / (2 * eps)
        # grad phi = N(pi(x)), so its derivative is the Hessian of phi
        Hfd[:, :, j] = (p.normal - m.normal) / (2 * eps)
    dt = time.perf_counter() - t0
    rg = float(np.max(np.linalg.norm(G - Gfd, axis=(1, 2)) / np.linalg.norm(G, axis=(1, 2))))
    rh = float(np.max(np.linalg.norm(H - Hfd, axis=(1, 2)) / np.linalg.norm(H, axis=(1, 2))))
    ok = rg < 1e-3 and rh < 1e-3 and dt < 2.0
    return ok, f"1000 tube points, grad pi rel err {rg:.2e}, hess phi rel err {rh:.2e}; {dt:.3f}s"


def criterion_7():
    two = union(circle(LEFT, 1.0), circle(RIGHT, 1.0))
    tri = generate_equilateral_grid((-2.8, -1.3, 2.8, 1.3), 0.2)
    cls, rep, loops, samples, vr = run(two, tri)
    match_ok = len(loops) == 2 and vr.component_bijection and vr.global_pass
    for lp in loops:
        P = tri.vertices[list(lp.vertex_cycle)]
        near = (np.abs(np.linalg.norm(P - RIGHT, axis=1) - 1) < np.abs(np.linalg.norm(P - LEFT, axis=1) - 1))
        match_ok &= len(set(near.tolist())) == 1 and vr.component_match[lp.loop_id] == int(near[0])

    grid = generate_equilateral_grid(CIRCLE_BOX, 0.2)
    k = 300
    centroid = grid.vertices[grid.triangles[k]].mean(axis=0)
    tiny = circle(tuple(centroid), 0.03)
    inside_one = bool(np.all(grid.locate(tiny.sample(n=256).position) == k))
    both = union(circle(CIRCLE_CENTER, 1.0), tiny)
    cls2, rep2, loops2, samples2, vr2 = run(both, grid)
    flag = rep2.components_touched == [True, False] and not rep2.gamma_h_nonempty and not vr2.global_pass
    ok = match_ok and inside_one and flag
    return ok, (
        f"two circles: {len(loops)} loops, match {vr.component_match}, bijection={vr.component_bijection}; "
        f"small circle inside triangle {k} only={inside_one}, components reached {rep2.components_touched}"
    )


def criterion_8():
    c = circle(CIRCLE_CENTER, 1.0)
    tri = generate_equilateral_grid(CIRCLE_BOX, 0.2)
    acute = bool(np.all(tri.angles < 90))
    *_, lp_pos, _, vr_pos = run(c, tri)
    *_, lp_neg, _, vr_neg = run(c, tri, mode="negative")
    E_pos = set().union(*(lp.edge_keys() for lp in lp_pos))
    E_neg = set().union(*(lp.edge_keys() for lp in lp_neg))
    ok = acute and vr_pos.global_pass and vr_neg.global_pass and not (E_pos & E_neg)
    return ok, (
        f"all acute={acute}; positive {len(E_pos)} edges verify={vr_pos.global_pass}, "
        f"negative {len(E_neg)} edges verify={vr_neg.global_pass}, shared edges {len(E_pos & E_neg)}"
    )


def _blob_inside(points, n=20000):
    """Even-odd membership against an independently built dense spline."""
    P = blob_points()
    Q = np.vstack([P, P[:1]])
    t = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(Q, axis=0), axis=1))])
    cs = CubicSpline(t, Q, bc_type="periodic")
    dense = cs(np.linspace(0, t[-1], n, endpoint=False))
    return MplPath(dense).contains_points(points), dense


def criterion_9():
    fixtures = []
    c = circle(CIRCLE_CENTER, 1.0)
    g02 = generate_equilateral_grid(CIRCLE_BOX, 0.2)
    fixtures.append(("circle", c, g02, "positive",
                     np.linalg.norm(g02.vertices - CIRCLE_CENTER, axis=1) - 1.0))
    fixtures.append(("circle negative", c, g02, "negative",
                     1.0 - np.linalg.norm(g02.vertices - CIRCLE_CENTER, axis=1)))
    e = ellipse(ELLIPSE_CENTER, 2.0, 1.0)
    ge = generate_equilateral_grid(ELLIPSE_BOX, 0.1)
    q = (ge.vertices - ELLIPSE_CENTER) / [2.0, 1.0]
    fixtures.append(("ellipse", e, ge, "positive", (q**2).sum(1) - 1.0))
    two = union(circle(LEFT, 1.0), circle(RIGHT, 1.0))
    gt = generate_equilateral_grid((-2.8, -1.3, 2.8, 1.3), 0.2)
    fixtures.append(("two circles", two, gt, "positive", np.minimum(
        np.linalg.norm(gt.vertices - LEFT, axis=1), np.linalg.norm(gt.vertices - RIGHT, axis=1)) - 1.0))
    b = spline(blob_points())
    gb = generate_equilateral_grid(BLOB_BOX, 0.05)
    inside, dense = _blob_inside(gb.vertices)
    clearance = cKDTree(dense).query(gb.vertices)[0]
    assert clearance.min() > 1e-6  # dense-polyline signs are reliable
    fixtures.append(("blob", b, gb, "positive", np.where(inside, -1.0, 1.0) * clearance))

    ok, parts = True, []
    for name, curve, tri, mode, sign_phi in fixtures:
        cls = classify(curve, tri, mode=mode)
        census = sign_sweep(tri, sign_phi) == cls.positive_edges
        loops = build_loops(cls)
        uf = union_find(cls.positive_edges) == sorted(sorted(lp.edge_keys()) for lp in loops)
        ok &= census and uf
        parts.append(f"{name}: census={census} union-find={uf}")
    (lp,) = build_loops({(0, 1): 0, (1, 2): 1, (0, 2): 2})
    tri_ok = union_find({(0, 1): 0, (1, 2): 1, (0, 2): 2}) == [sorted(lp.edge_keys())]
    ok &= tri_ok
    parts.append(f"3-cycle: union-find={tri_ok}")
    return ok, "; ".join(parts)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_acceptance(n):
    ok, detail = CRITERIA[n - 1]()
    assert record(n, ok, detail), detail


if __name__ == "__main__":
    results = [record(i + 1, *f()) for i, f in enumerate(CRITERIA)]
    sys.exit(0 if all(results) else 1)
