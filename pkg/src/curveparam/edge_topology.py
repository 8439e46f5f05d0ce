"""Assemble the union of positive edges into closed vertex loops."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousOrientation, DegreeViolation, NotImmersed, OpenChain
from .triangulation import edge_key


@dataclass(frozen=True)
class PositiveLoop:
    """A closed polygon of positive edges.

    ``vertex_cycle[i]`` and ``vertex_cycle[(i + 1) % m]`` span edge ``i``,
    owned by triangle ``edge_owners[i]``.
    """

    vertex_cycle: tuple
    edge_owners: tuple
    loop_id: int

    @property
    def n_edges(self) -> int:
        return len(self.vertex_cycle)

    def edges(self):
        v = self.vertex_cycle
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def edge_keys(self):
        return {edge_key(a, b) for a, b in self.edges()}

    def reversed(self) -> "PositiveLoop":
        v = self.vertex_cycle
        rv = (v[0],) + tuple(reversed(v[1:]))
        ro = tuple(reversed(self.edge_owners))
        return PositiveLoop(rv, ro, self.loop_id)


def vertex_degrees(positive_edges) -> dict:
    deg: dict = defaultdict(int)
    for a, b in positive_edges:
        deg[a] += 1
        deg[b] += 1
    return dict(deg)


def build_loops(cls, check_simple: bool = True) -> list:
    """Walk the positive edges into loops.

    Each walk starts from the lowest unvisited edge key and follows the unique
    other positive edge at each vertex, so the output does not depend on
    dictionary ordering.

    Raises
    ------
    DegreeViolation
        Some vertex has other than two incident positive edges.
    OpenChain
        A walk fails to return to its start.
    NotImmersed
        A loop crosses itself (only when ``check_simple``).
    """
    owners = cls.positive_edges if hasattr(cls, "positive_edges") else dict(cls)
    deg = vertex_degrees(owners)
    bad = sorted((v, d) for v, d in deg.items() if d != 2)
    if bad:
        raise DegreeViolation(*bad[0])
    nbrs: dict = defaultdict(list)
    for a, b in owners:
        nbrs[a].append(b)
        nbrs[b].append(a)

    visited = set()
    loops = []
    for start in sorted(owners):
        if start in visited:
            continue
        v0, v = start
        cycle = [v0]
        prev = v0
        visited.add(start)
        while v != v0:
            if v in cycle:
                raise OpenChain(f"walk from edge {start} revisits vertex {v}")
            cycle.append(v)
            a, b = nbrs[v]
            nxt = b if a == prev else a
            visited.add(edge_key(v, nxt))
            prev, v = v, nxt
            if len(cycle) > len(owners):
                raise OpenChain(f"walk from edge {start} does not close")
        if len(cycle) < 3:
            raise OpenChain(f"walk from edge {start} closes after {len(cycle)} vertices")
        own = tuple(owners[edge_key(cycle[i], cycle[(i + 1) % len(cycle)])] for i in range(len(cycle)))
        loops.append(PositiveLoop(tuple(cycle), own, len(loops)))
    if check_simple and hasattr(cls, "tri"):
        for lp in loops:
            hit = first_self_intersection(cls.tri.vertices, lp)
            if hit is not None:
                raise NotImmersed(f"loop {lp.loop_id} edges {hit[0]} and {hit[1]} intersect")
    return loops


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


def first_self_intersection(vertices, loop: PositiveLoop):
    """First pair of non-adjacent loop edges that touch, or None."""
    V = np.asarray(vertices, dtype=float)
    E = loop.edges()
    m = len(E)
    P = V[np.array(E)]  # (m, 2, 2)
    lo, hi = P.min(axis=1), P.max(axis=1)
    for i in range(m):
        # bounding-box prefilter
        cand = np.flatnonzero(np.all(lo[i] <= hi, axis=1) & np.all(lo <= hi[i], axis=1))
        for j in cand.tolist():
            if j <= i or j == i + 1 or (i == 0 and j == m - 1):
                continue
            if _segments_cross(P[i, 0], P[i, 1], P[j, 0], P[j, 1]):
                return E[i], E[j]
    return None


def loop_orientation(loop: PositiveLoop, curve, vertices) -> int:
    """+1 when walking the loop moves its projections forward in arclength.

    Each edge votes with the sign of the wrapped arclength increment between
    the projections of its endpoints.
    """
    V = np.asarray(vertices, dtype=float)
    cyc = np.array(loop.vertex_cycle)
    pr = curve.project(V[cyc])
    ds = np.roll(pr.s, -1) - pr.s
    ds = (ds + 0.5) % 1.0 - 0.5
    votes = int(np.sum(ds > 0)) - int(np.sum(ds < 0))
    if votes == 0:
        raise AmbiguousOrientation(f"loop {loop.loop_id}: orientation vote tied")
    return 1 if votes > 0 else -1


def orient_loops(loops, curve, vertices) -> list:
    """Reverse any loop whose orientation is -1."""
    return [lp if loop_orientation(lp, curve, vertices) > 0 else lp.reversed() for lp in loops]



def loops_from_cycles(cls, cycles) -> list:
    """Rebuild loops from vertex cycles, e.g. a loop dump, checking each edge
    against the classification."""
    loops = []
    for i, cyc in enumerate(cycles):
        cyc = [int(v) for v in cyc]
        if len(cyc) < 3 or len(set(cyc)) != len(cyc):
            raise OpenChain(f"loop {i} is not a simple cycle of at least 3 vertices")
        own = []
        for j in range(len(cyc)):
            key = edge_key(cyc[j], cyc[(j + 1) % len(cyc)])
            if key not in cls.positive_edges:
                raise OpenChain(f"loop {i}: {key} is not a positive edge")
            own.append(cls.positive_edges[key])
        loops.append(PositiveLoop(tuple(cyc), tuple(own), i))
    return loops
