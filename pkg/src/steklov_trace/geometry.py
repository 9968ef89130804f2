"""Planar domains, meshes and arclength parameterizations of their boundaries.

Two kinds of domain are supported:

* :class:`DiskDomain`, kept analytic so that spectral computations on the
  disk never inherit a discretization error;
* :class:`Mesh2D`, a conforming mesh of P1 triangles or axis-aligned
  rectangles (for the bicubic Hermite element).

Every boundary is traversed counterclockwise.  Outward normals are the
clockwise rotation of the unit tangent, so they point outward without any
point-in-polygon test.  On polygons the normal is defined edge by edge and
boundary sample nodes are placed strictly inside edges; corners never carry
a sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from .errors import InvalidArgument

P1 = "p1"
C1RECT = "c1rect"
ELEMENT_TYPES = (P1, C1RECT)

_UNIT_TOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiskDomain:
    """Analytic disk of radius ``radius`` centred at ``center``."""

    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise InvalidArgument(f"disk radius must be positive, got {self.radius}")

    @property
    def perimeter(self):
        return 2.0 * np.pi * self.radius


@dataclass(frozen=True)
class BoundaryParam:
    """Arclength parameterization of a closed boundary sampled at nodes.

    Parameters
    ----------
    total_length : float
        Length of the boundary.
    node_arclengths : ndarray of shape (n,)
        Strictly increasing sample positions in ``[0, total_length)``.
    points, tangents, normals : ndarray of shape (n, 2)
        Node coordinates, unit tangents and outward unit normals.
    weights : ndarray of shape (n,)
        Boundary quadrature weights; they sum to ``total_length``.
    vertex_positions : ndarray
        Arclengths of polygon corners (empty for the disk).
    side_ranges : list of (float, float)
        Arclength interval covered by each straight side.
    node_side : ndarray of int
        Side index of every node (all zero for the disk).
    """

    total_length: float
    node_arclengths: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    vertex_positions: np.ndarray = field(default_factory=lambda: _frozen([]))
    side_ranges: tuple = ()
    node_side: np.ndarray = None
    kind: str = "polygon"

    def __post_init__(self):
        for name in ("node_arclengths", "points", "tangents", "normals", "weights",
                     "vertex_positions"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.node_arclengths.size
        if self.node_side is None:
            object.__setattr__(self, "node_side", _frozen(np.zeros(n), int))
        else:
            object.__setattr__(self, "node_side", _frozen(self.node_side, int))
        object.__setattr__(self, "side_ranges", tuple(tuple(map(float, r)) for r in self.side_ranges))
        s = self.node_arclengths
        if n < 2 or np.any(np.diff(s) <= 0) or s[0] < 0 or s[-1] >= self.total_length:
            raise InvalidArgument("node arclengths must be strictly increasing in [0, L)")
        if not (self.points.shape == self.tangents.shape == self.normals.shape == (n, 2)):
            raise InvalidArgument("points, tangents and normals must have shape (n, 2)")
        t, nu = self.tangents, self.normals
        if (np.max(np.abs(np.hypot(*t.T) - 1)) > _UNIT_TOL
                or np.max(np.abs(np.hypot(*nu.T) - 1)) > _UNIT_TOL
                or np.max(np.abs(np.einsum("ij,ij->i", t, nu))) > _UNIT_TOL):
            raise InvalidArgument("tangents and normals must be orthonormal at every node")

    @property
    def n_nodes(self):
        return self.node_arclengths.size

    def integrate(self, values):
        """Boundary integral of sampled values (last axis runs over nodes)."""
        return np.asarray(values) @ self.weights

    def inner(self, f, g):
        """Discrete L2(boundary) inner product of two sampled functions."""
        return self.integrate(np.asarray(f) * np.asarray(g))

    def decimate(self, factor):
        """Return the parameterization restricted to every ``factor``-th node.

        Weights of the coarse nodes are the arclength Voronoi cells, so the
        coarse rule is again a consistent quadrature on the boundary.
        """
        if factor < 1:
            raise InvalidArgument("decimation factor must be >= 1")
        idx = np.arange(0, self.n_nodes, factor)
        s = self.node_arclengths[idx]
        L = self.total_length
        gaps = np.diff(np.concatenate([s, [s[0] + L]]))
        w = 0.5 * (gaps + np.roll(gaps, 1))
        return BoundaryParam(L, s, self.points[idx], self.tangents[idx], self.normals[idx], w,
                             self.vertex_positions, self.side_ranges, self.node_side[idx],
                             self.kind)

    def reversed(self):
        """Same node set traversed clockwise (normals keep pointing outward)."""
        L = self.total_length
        s = (L - self.node_arclengths[::-1]) % L
        order = np.argsort(s, kind="stable")
        idx = (self.n_nodes - 1 - np.arange(self.n_nodes))[order]
        vp = np.sort((L - self.vertex_positions) % L)
        sides = tuple(sorted(((L - b) % L, (L - a) % L or L) for a, b in self.side_ranges))
        return BoundaryParam(L, s[order], self.points[idx], -self.tangents[idx],
                             self.normals[idx], self.weights[idx], vp, sides,
                             self.node_side[idx], self.kind)


@dataclass(frozen=True)
class BoundarySamples:
    """A scalar or 2-vector field sampled at the nodes of a :class:`BoundaryParam`."""

    param: BoundaryParam
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape[0] != self.param.n_nodes:
            raise InvalidArgument(
                f"expected {self.param.n_nodes} samples, got {v.shape[0]}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, param, func):
        """Sample ``func(x, y)`` at the boundary nodes."""
        x, y = param.points.T
        return cls(param, np.broadcast_to(func(x, y), x.shape).astype(float))

    def __add__(self, other):
        _check_same_param(self.param, other.param)
        return BoundarySamples(self.param, self.values + other.values)

    def __sub__(self, other):
        _check_same_param(self.param, other.param)
        return BoundarySamples(self.param, self.values - other.values)

    def __mul__(self, c):
        return BoundarySamples(self.param, c * self.values)

    __rmul__ = __mul__


def _check_same_param(a, b):
    if a is not b and (a.n_nodes != b.n_nodes
                       or not np.array_equal(a.node_arclengths, b.node_arclengths)):
        raise InvalidArgument("boundary samples live on different parameterizations")


def build_disk(R, n_boundary_samples):
    """Analytic disk with uniform angular boundary samples.

    The trapezoidal rule on ``n`` equispaced angles integrates trigonometric
    polynomials of degree below ``n`` exactly, which is what makes the
    discrete boundary Gram matrices of the disk bases exact.

    Returns
    -------
    (DiskDomain, BoundaryParam)
    """
    if n_boundary_samples < 8:
        raise InvalidArgument("a disk needs at least 8 boundary samples")
    disk = DiskDomain(float(R))
    n = int(n_boundary_samples)
    theta = 2.0 * np.pi * np.arange(n) / n
    c, s = np.cos(theta), np.sin(theta)
    normals = np.column_stack([c, s])
    tangents = np.column_stack([-s, c])
    param = BoundaryParam(
        total_length=disk.perimeter,
        node_arclengths=disk.radius * theta,
        points=disk.radius * normals + np.asarray(disk.center, float),
        tangents=tangents,
        normals=normals,
        weights=np.full(n, disk.perimeter / n),
        side_ranges=((0.0, disk.perimeter),),
        kind="disk",
    )
    return disk, param


def node_angles(param):
    """Polar angles of the boundary nodes of a disk parameterization."""
    return np.arctan2(param.normals[:, 1], param.normals[:, 0]) % (2 * np.pi)


class Mesh2D:
    """Conforming triangle or rectangle mesh with a derived oriented boundary.

    Parameters
    ----------
    vertices : array_like of shape (nv, 2)
    cells : array_like of shape (nc, 3) or (nc, 4)
        Triangles for ``element_type='p1'``, axis-aligned rectangles for
        ``'c1rect'``.  Cells are reordered counterclockwise.
    element_type : {'p1', 'c1rect'}

    Attributes
    ----------
    boundary_edges : ndarray of shape (m, 2)
        Vertex pairs of the boundary edges, in boundary-cycle order.
    boundary_normals : ndarray of shape (m, 2)
        Outward unit normal of each boundary edge.
    boundary_offsets : ndarray of shape (m,)
        Arclength at the start of each boundary edge.
    boundary_cells : ndarray of shape (m,)
        The unique cell owning each boundary edge.
    """

    def __init__(self, vertices, cells, element_type):
        if element_type not in ELEMENT_TYPES:
            raise InvalidArgument(f"unknown element type {element_type!r}")
        self.element_type = element_type
        self.vertices = _frozen(vertices)
        nper = 3 if element_type == P1 else 4
        cells = np.array(cells, dtype=int)
        if cells.ndim != 2 or cells.shape[1] != nper or cells.shape[0] == 0:
            raise InvalidArgument(f"{element_type} cells need {nper} vertices each")
        if cells.min() < 0 or cells.max() >= len(self.vertices):
            raise InvalidArgument("cell refers to a missing vertex")
        if element_type == P1:
            cells = self._orient_triangles(cells)
        else:
            cells = self._orient_rectangles(cells)
        self.cells = _frozen(cells, int)
        self._build_boundary()

    # -- construction helpers -------------------------------------------------
    def _orient_triangles(self, cells):
        area = self.signed_areas(cells)
        if np.any(np.abs(area) <= 1e-14):
            raise InvalidArgument("degenerate triangle in mesh")
        flip = area < 0
        cells[flip] = cells[flip][:, [0, 2, 1]]
        return cells

    def _orient_rectangles(self, cells):
        out = np.empty_like(cells)
        for c, cell in enumerate(cells):
            p = self.vertices[cell]
            x0, y0 = p.min(axis=0)
            x1, y1 = p.max(axis=0)
            if x1 - x0 <= 1e-14 or y1 - y0 <= 1e-14:
                raise InvalidArgument("degenerate rectangle in mesh")
            corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
            for k, q in enumerate(corners):
                hit = np.flatnonzero(np.all(np.abs(p - q) <= 1e-12 * max(1.0, abs(x1) + abs(y1)),
                                            axis=1))
                if hit.size != 1:
                    raise InvalidArgument("c1rect cells must be axis-aligned rectangles")
                out[c, k] = cell[hit[0]]
        return out

    def signed_areas(self, cells=None):
        cells = self.cells if cells is None else cells
        p = self.vertices[cells]
        if cells.shape[1] == 3:
            a, b, c = p[:, 0], p[:, 1], p[:, 2]
            return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                          - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        ext = p.max(axis=1) - p.min(axis=1)
        return ext[:, 0] * ext[:, 1]

    def _build_boundary(self):
        nper = self.cells.shape[1]
        owner = {}
        for c, cell in enumerate(self.cells):
            for k in range(nper):
                a, b = int(cell[k]), int(cell[(k + 1) % nper])
                key = (min(a, b), max(a, b))
                owner.setdefault(key, []).append((a, b, c))
        bnd = [v[0] for v in owner.values() if len(v) == 1]
        if any(len(v) > 2 for v in owner.values()):
            raise InvalidArgument("non-manifold mesh: an edge is shared by more than two cells")
        if not bnd:
            raise InvalidArgument("mesh has no boundary")
        nxt = {}
        for a, b, c in bnd:
            if a in nxt:
                raise InvalidArgument("boundary is not a simple closed curve")
            nxt[a] = (b, c)
        # deterministic start: the lexicographically smallest corner vertex
        V = self.vertices
        def direction(a, b):
            d = V[b] - V[a]
            return d / np.hypot(*d)
        prev = {b: a for a, (b, _) in nxt.items()}
        corners = [a for a in nxt
                   if np.dot(direction(prev[a], a), direction(a, nxt[a][0])) < 1 - 1e-12]
        pool = corners or list(nxt)
        start = min(pool, key=lambda v: (V[v][0], V[v][1]))
        edges, cells_, v = [], [], start
        for _ in range(len(bnd)):
            b, c = nxt[v]
            edges.append((v, b))
            cells_.append(c)
            v = b
            if v == start:
                break
        if v != start or len(edges) != len(bnd):
            raise InvalidArgument("boundary must be a single closed cycle (no holes)")
        edges = np.array(edges)
        d = V[edges[:, 1]] - V[edges[:, 0]]
        lengths = np.hypot(d[:, 0], d[:, 1])
        t = d / lengths[:, None]
        self.boundary_edges = _frozen(edges, int)
        self.boundary_cells = _frozen(cells_, int)
        self.boundary_tangents = _frozen(t)
        self.boundary_normals = _frozen(np.column_stack([t[:, 1], -t[:, 0]]))
        self.boundary_lengths = _frozen(lengths)
        self.boundary_offsets = _frozen(np.concatenate([[0.0], np.cumsum(lengths)[:-1]]))
        self.perimeter = float(lengths.sum())
        if self.perimeter <= 0 or np.sum(self.signed_areas()) <= 0:
            raise InvalidArgument("mesh boundary is not positively oriented")

    # -- queries ----------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def h(self):
        """Largest cell diameter."""
        p = self.vertices[self.cells]
        ext = p.max(axis=1) - p.min(axis=1)
        if self.element_type == C1RECT:
            return float(np.max(np.hypot(ext[:, 0], ext[:, 1])))
        e = np.concatenate([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
        return float(np.max(np.hypot(e[:, 0], e[:, 1])))

    def corner_edges(self):
        """Indices ``k`` such that boundary edges ``k-1`` and ``k`` meet at a corner."""
        t = self.boundary_tangents
        dots = np.einsum("ij,ij->i", np.roll(t, 1, axis=0), t)
        return np.flatnonzero(dots < 1 - 1e-12)

    def boundary_vertex_indices(self):
        return np.unique(self.boundary_edges)

    # -- serialization -------------------------------------------------------
    def to_dict(self):
        return {"vertices": self.vertices.tolist(), "cells": self.cells.tolist(),
                "element_type": self.element_type}

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["vertices"], data["cells"], data["element_type"])
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed mesh description: {exc}") from exc

    @classmethod
    def from_json(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgument(f"cannot read mesh file {path}: {exc}") from exc
        return cls.from_dict(data)


def mesh_boundary_param(mesh, n_gauss=4):
    """Boundary parameterization of a mesh with Gauss nodes inside each edge.

    With ``n_gauss`` points per edge the rule is exact for polynomials of
    degree ``2 n_gauss - 1`` along each edge, so products of cubic Hermite
    traces (degree 6) are integrated exactly for the default of 4.
    """
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    xi = 0.5 * (xg + 1.0)
    wg = 0.5 * wg
    E = mesh.boundary_edges
    V = mesh.vertices
    lengths = mesh.boundary_lengths
    m = len(E)
    s = (mesh.boundary_offsets[:, None] + lengths[:, None] * xi[None, :]).ravel()
    pts = (V[E[:, 0]][:, None, :] * (1 - xi)[None, :, None]
           + V[E[:, 1]][:, None, :] * xi[None, :, None]).reshape(-1, 2)
    t = np.repeat(mesh.boundary_tangents, n_gauss, axis=0)
    nu = np.repeat(mesh.boundary_normals, n_gauss, axis=0)
    w = (lengths[:, None] * wg[None, :]).ravel()
    corners = mesh.corner_edges()
    side_of_edge = np.zeros(m, int)
    if corners.size:
        # sides start at corners; the cycle starts at a corner by construction
        side_of_edge = np.searchsorted(corners, np.arange(m), side="right") - 1
        side_of_edge[side_of_edge < 0] = len(corners) - 1
    vertex_pos = mesh.boundary_offsets[corners] if corners.size else np.array([])
    ends = np.concatenate([vertex_pos[1:], [mesh.perimeter]]) if corners.size else []
    sides = tuple(zip(vertex_pos, ends)) if corners.size else ((0.0, mesh.perimeter),)
    return BoundaryParam(mesh.perimeter, s, pts, t, nu, w, vertex_pos, sides,
                         np.repeat(side_of_edge, n_gauss), "polygon")


def build_rect_mesh(lx, ly, nx, ny, element_type):
    """Structured mesh of the rectangle ``[0, lx] x [0, ly]``.

    P1 meshes split every grid rectangle into two triangles along the same
    diagonal direction, so dyadic refinements are nested.

    Returns
    -------
    (Mesh2D, BoundaryParam)
    """
    if lx <= 0 or ly <= 0:
        raise InvalidArgument("rectangle side lengths must be positive")
    if int(nx) < 1 or int(ny) < 1:
        raise InvalidArgument("need at least one subdivision per direction")
    element_type = {"P1": P1, "P1-triangle": P1, "C1-rect": C1RECT,
                    "C1-rectangle": C1RECT}.get(element_type, element_type)
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[1:, :-1].ravel()
    if element_type == P1:
        cells = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    elif element_type == C1RECT:
        cells = np.column_stack([a, b, c, d])
    else:
        raise InvalidArgument(f"unknown element type {element_type!r}")
    mesh = Mesh2D(vertices, cells, element_type)
    return mesh, mesh_boundary_param(mesh)


def build_polygon_disk_mesh(R, refinement):
    """Triangulated regular polygon inscribed in the circle of radius ``R``.

    Refinement level ``r`` uses ``L = 2**r`` concentric rings, ring ``i``
    carrying ``6 i`` points, so the boundary is a regular ``6 L``-gon.

    Returns
    -------
    (Mesh2D, BoundaryParam)
    """
    if R <= 0:
        raise InvalidArgument("radius must be positive")
    if int(refinement) < 1:
        raise InvalidArgument("refinement must be >= 1")
    L = 2 ** int(refinement)
    pts = [np.zeros((1, 2))]
    for i in range(1, L + 1):
        m = 6 * i
        th = 2 * np.pi * np.arange(m) / m + (0.5 * np.pi / m if i % 2 else 0.0)
        pts.append(R * i / L * np.column_stack([np.cos(th), np.sin(th)]))
    vertices = np.concatenate(pts)
    tri = Delaunay(vertices)
    cells = tri.simplices
    p = vertices[cells]
    area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    cells = cells[area > 1e-12 * R * R]
    mesh = Mesh2D(vertices, cells, P1)
    return mesh, mesh_boundary_param(mesh)


def polygon_param(corners, n_per_side):
    """Uniform midpoint sampling of the boundary of a convex or simple polygon.

    Each side is split into ``n_per_side`` equal cells and one node is placed
    at every cell midpoint, so no node sits on a corner.

    Parameters
    ----------
    corners : array_like of shape (nv, 2)
        Polygon corners in counterclockwise order.
    n_per_side : int or sequence of int
    """
    P = np.asarray(corners, float)
    nv = len(P)
    if nv < 3:
        raise InvalidArgument("a polygon needs at least three corners")
    counts = np.broadcast_to(np.asarray(n_per_side, int), (nv,))
    if np.any(counts < 1):
        raise InvalidArgument("need at least one node per side")
    Q = np.roll(P, -1, axis=0)
    d = Q - P
    lengths = np.hypot(d[:, 0], d[:, 1])
    area = 0.5 * np.sum(P[:, 0] * Q[:, 1] - Q[:, 0] * P[:, 1])
    if area <= 0:
        raise InvalidArgument("polygon corners must be counterclockwise")
    offsets = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    s, pts, t, nu, w, side = [], [], [], [], [], []
    for j in range(nv):
        n = counts[j]
        xi = (np.arange(n) + 0.5) / n
        tj = d[j] / lengths[j]
        s.append(offsets[j] + lengths[j] * xi)
        pts.append(P[j] + xi[:, None] * d[j])
        t.append(np.tile(tj, (n, 1)))
        nu.append(np.tile([tj[1], -tj[0]], (n, 1)))
        w.append(np.full(n, lengths[j] / n))
        side.append(np.full(n, j))
    total = float(lengths.sum())
    sides = tuple(zip(offsets, np.concatenate([offsets[1:], [total]])))
    return BoundaryParam(total, np.concatenate(s), np.concatenate(pts), np.concatenate(t),
                         np.concatenate(nu), np.concatenate(w), offsets, sides,
                         np.concatenate(side), "polygon")
