"""Background triangulations: vertex list + connectivity, metrics, adjacency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateTriangle,
    DuplicateVertex,
    IndexOutOfRange,
    NonManifoldEdge,
    UnknownEdge,
)


def edge_key(i, j):
    """Orientation-free edge identity."""
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class TriangleMetrics:
    h_K: float  # diameter (longest edge)
    rho_K: float  # diameter of the inscribed circle
    sigma_K: float  # shape parameter h_K / rho_K
    interior_angles: dict  # vertex id -> degrees


def _angles_deg(P):
    """Interior angles (degrees) at the three corners of triangles ``P`` (m, 3, 2)."""
    out = np.empty(P.shape[:2])
    for k in range(3):
        a = P[:, k]
        u = P[:, (k + 1) % 3] - a
        v = P[:, (k + 2) % 3] - a
        cr = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        out[:, k] = np.degrees(np.arctan2(cr, (u * v).sum(-1)))
    return out


class Triangulation:
    """Validated triangulation of a polygonal region.

    Parameters
    ----------
    vertices : array_like, shape (nv, 2)
    triangles : array_like of int, shape (nt, 3)
        Zero-based connectivity; vertex order within a triangle is irrelevant.

    Raises
    ------
    IndexOutOfRange, DuplicateVertex, DegenerateTriangle, NonManifoldEdge
    """

    def __init__(self, vertices, triangles):
        V = np.asarray(vertices, dtype=float)
        C = np.asarray(triangles)
        if V.ndim != 2 or V.shape[1] != 2:
            raise ValueError(f"vertices must have shape (nv, 2), got {V.shape}")
        if C.size == 0:
            C = C.reshape(0, 3)
        if C.ndim != 2 or C.shape[1] != 3:
            raise ValueError(f"triangles must have shape (nt, 3), got {C.shape}")
        if not np.issubdtype(C.dtype, np.integer):
            if not np.all(C == np.round(C)):
                raise ValueError("connectivity must be integral")
        C = C.astype(np.int64)
        if C.size and (C.min() < 0 or C.max() >= len(V)):
            bad = C[(C < 0) | (C >= len(V))][0]
            raise IndexOutOfRange(f"connectivity references vertex {bad} of {len(V)}")
        self.vertices = V
        self.triangles = C
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self._check_duplicates()

        P = V[C]
        e = [P[:, (k + 1) % 3] - P[:, k] for k in range(3)]
        lengths = np.stack([np.linalg.norm(x, axis=1) for x in e], axis=1)
        area = 0.5 * np.abs(e[0][:, 0] * (-e[2][:, 1]) - e[0][:, 1] * (-e[2][:, 0]))
        scale = self.bbox_diagonal
        if len(C) and np.any(area <= (1e-14 * scale) ** 2):
            k = int(np.argmin(area))
            raise DegenerateTriangle(f"triangle {k} {tuple(C[k])} has zero area")
        self.areas = area
        self.h = lengths.max(axis=1) if len(C) else np.zeros(0)
        self.rho = 4.0 * area / lengths.sum(axis=1) if len(C) else np.zeros(0)
        self.sigma = self.h / self.rho if len(C) else np.zeros(0)
        self.angles = _angles_deg(P) if len(C) else np.zeros((0, 3))

        edge_map: dict[tuple[int, int], list[int]] = {}
        for k, (a, b, c) in enumerate(C.tolist()):
            for i, j in ((a, b), (b, c), (c, a)):
                edge_map.setdefault(edge_key(i, j), []).append(k)
        for key, tris in edge_map.items():
            if len(tris) > 2:
                raise NonManifoldEdge(f"edge {key} is shared by triangles {tris}")
        self.edge_map = edge_map

    def _check_duplicates(self):
        V = self.vertices
        if len(V) < 2:
            return
        tol = 1e-12 * self.bbox_diagonal
        pairs = cKDTree(V).query_pairs(tol, output_type="ndarray")
        if len(pairs):
            i, j = sorted(pairs[0].tolist())
            raise DuplicateVertex(f"vertices {i} and {j} coincide within {tol:.3g}")

    @property
    def bbox_diagonal(self) -> float:
        if len(self.vertices) == 0:
            return 0.0
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.hypot(*span))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def boundary_edges(self):
        return sorted(k for k, t in self.edge_map.items() if len(t) == 1)

    def edge_incident_triangles(self, edge) -> list[int]:
        key = edge_key(*edge)
        try:
            return list(self.edge_map[key])
        except KeyError:
            raise UnknownEdge(f"no edge {key} in the triangulation") from None

    def triangle_metrics(self, k: int) -> TriangleMetrics:
        if not 0 <= k < self.n_triangles:
            raise IndexOutOfRange(f"triangle {k} of {self.n_triangles}")
        return TriangleMetrics(
            h_K=float(self.h[k]),
            rho_K=float(self.rho[k]),
            sigma_K=float(self.sigma[k]),
            interior_angles={int(v): float(a) for v, a in zip(self.triangles[k], self.angles[k])},
        )

    def angle_at(self, k: int, v: int) -> float:
        row = self.triangles[k]
        (pos,) = np.flatnonzero(row == v)
        return float(self.angles[k, pos])

    def locate(self, points, tol=1e-12):
        """Index of a closed triangle containing each point, or -1."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(len(P), -1, dtype=int)
        if self.n_triangles == 0:
            return out
        A = self.vertices[self.triangles]
        v0 = A[:, 1] - A[:, 0]
        v1 = A[:, 2] - A[:, 0]
        det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
        chunk = max(1, 2_000_000 // max(1, self.n_triangles))
        for s in range(0, len(P), chunk):
            Q = P[s : s + chunk, None, :] - A[None, :, 0]
            l1 = (Q[..., 0] * v1[:, 1] - Q[..., 1] * v1[:, 0]) / det
            l2 = (v0[:, 0] * Q[..., 1] - v0[:, 1] * Q[..., 0]) / det
            inside = (l1 >= -tol) & (l2 >= -tol) & (l1 + l2 <= 1 + tol)
            hit = inside.any(axis=1)
            out[s : s + chunk] = np.where(hit, inside.argmax(axis=1), -1)
        return out


def build_triangulation(vertices, connectivity) -> Triangulation:
    return Triangulation(vertices, connectivity)


def triangle_metrics(tri: Triangulation, k: int) -> TriangleMetrics:
    return tri.triangle_metrics(k)


def edge_incident_triangles(tri: Triangulation, edge) -> list[int]:
    return tri.edge_incident_triangles(edge)


def equilateral_grid_shape(bbox, h, margin=1):
    """Vertices per row and number of rows used by :func:`generate_equilateral_grid`."""
    x0, y0, x1, y1 = map(float, bbox)
    row = h * np.sqrt(3.0) / 2.0
    nx = int(np.ceil((x1 - x0) / h)) + 2 * margin + 2
    ny = int(np.ceil((y1 - y0) / row)) + 2 * margin + 1
    return nx, ny


def generate_equilateral_grid(bbox, h, margin=1) -> Triangulation:
    """Rows of alternating up/down equilateral triangles of side ``h`` covering
    ``bbox`` with ``margin`` extra cells on every side.

    The grid has ``2 (nx - 1) (ny - 1)`` triangles, see
    :func:`equilateral_grid_shape`.
    """
    x0, y0, x1, y1 = map(float, bbox)
    if h <= 0:
        raise ValueError("h must be positive")
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate bbox")
    row = h * np.sqrt(3.0) / 2.0
    nx, ny = equilateral_grid_shape(bbox, h, margin)
    xs = x0 - margin * h - 0.5 * h + h * np.arange(nx)
    verts = []
    for j in range(ny):
        shift = 0.5 * h if j % 2 else 0.0
        y = y0 - margin * row + j * row
        verts.append(np.column_stack([xs + shift, np.full(nx, y)]))
    V = np.vstack(verts)

    def vid(j, i):
        return j * nx + i

    tris = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            if j % 2 == 0:
                tris.append((vid(j, i), vid(j, i + 1), vid(j + 1, i)))
                tris.append((vid(j, i + 1), vid(j + 1, i + 1), vid(j + 1, i)))
            else:
                tris.append((vid(j, i), vid(j, i + 1), vid(j + 1, i + 1)))
                tris.append((vid(j, i), vid(j + 1, i + 1), vid(j + 1, i)))
    return Triangulation(V, np.array(tris, dtype=np.int64))
