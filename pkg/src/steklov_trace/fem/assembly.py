"""Finite-element spaces and assembly of the Steklov-type bilinear forms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..errors import InvalidArgument
from ..geometry import C1RECT, P1, Mesh2D, mesh_boundary_param
from ..spectrum import AuxiliaryProblemSpec, SteklovProblemSpec
from .elements import hermite_hessian_matrix, hermite_rect, p1_stiffness


class FESpace:
    """Conforming finite-element space on a :class:`Mesh2D`.

    ``k = 1`` uses P1 triangles with one DOF per vertex.  ``k = 2`` uses
    bicubic Hermite rectangles with DOFs ``4 v + (u, u_x, u_y, u_xy)`` at
    vertex ``v``.  Boundary traces are sampled at the Gauss nodes of
    :func:`mesh_boundary_param`, where the boundary quadrature is exact for
    products of traces.
    """

    def __init__(self, mesh, n_gauss=4):
        self.mesh = mesh
        self.n_gauss = n_gauss
        self.param = mesh_boundary_param(mesh, n_gauss)
        self.k = 1 if mesh.element_type == P1 else 2
        self.dofs_per_vertex = 1 if self.k == 1 else 4
        self.ndof = mesh.n_vertices * self.dofs_per_vertex
        self._traces = {}

    def cell_dofs(self):
        c = self.mesh.cells
        if self.k == 1:
            return c
        return (4 * c[:, :, None] + np.arange(4)[None, None, :]).reshape(len(c), 16)

    def trace_matrix(self, m):
        """Sparse map from coefficients to ``∂^m u/∂ν^m`` at the boundary nodes."""
        if not 0 <= m < self.k:
            raise InvalidArgument(f"trace order {m} not available for k={self.k}")
        if m not in self._traces:
            self._traces[m] = (self._p1_trace() if self.k == 1 else self._hermite_trace(m)).tocsr()
        return self._traces[m]

    def _p1_trace(self):
        xg = np.polynomial.legendre.leggauss(self.n_gauss)[0]
        t = 0.5 * (xg + 1)
        E = self.mesh.boundary_edges
        rows = np.arange(len(E) * self.n_gauss)
        a = np.repeat(E[:, 0], self.n_gauss)
        b = np.repeat(E[:, 1], self.n_gauss)
        tt = np.tile(t, len(E))
        return sparse.coo_matrix((np.concatenate([1 - tt, tt]),
                                  (np.concatenate([rows, rows]), np.concatenate([a, b]))),
                                 shape=(len(rows), self.ndof))

    def _hermite_trace(self, m):
        mesh, param = self.mesh, self.param
        dofs = self.cell_dofs()
        rows, cols, vals = [], [], []
        for e, c in enumerate(mesh.boundary_cells):
            p = mesh.vertices[mesh.cells[c]]
            x0, y0 = p[0]
            hx, hy = p[2] - p[0]
            sl = slice(e * self.n_gauss, (e + 1) * self.n_gauss)
            pts = param.points[sl]
            xi, eta = (pts[:, 0] - x0) / hx, (pts[:, 1] - y0) / hy
            if m == 0:
                B = hermite_rect(xi, eta, hx, hy)
            else:
                nu = mesh.boundary_normals[e]
                B = nu[0] * hermite_rect(xi, eta, hx, hy, 1, 0) + nu[1] * hermite_rect(xi, eta, hx, hy, 0, 1)
            r = np.arange(sl.start, sl.stop)
            rows.append(np.repeat(r, 16))
            cols.append(np.tile(dofs[c], len(r)))
            vals.append(B.ravel())
        M = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(param.n_nodes, self.ndof))
        M.eliminate_zeros()
        return M

    def interpolate(self, func):
        """Coefficient vector interpolating a smooth function.

        For P1, ``func(x, y)`` returns values.  For Hermite elements it
        returns the tuple ``(u, u_x, u_y, u_xy)``.
        """
        x, y = self.mesh.vertices.T
        if self.k == 1:
            return np.asarray(func(x, y), float) * np.ones(len(x))
        parts = func(x, y)
        out = np.zeros((len(x), 4))
        for i, p in enumerate(parts):
            out[:, i] = p
        return out.ravel()


@dataclass
class AssembledForms:
    """Sparse matrices of one discrete eigenproblem.

    Attributes
    ----------
    lhs : csr_matrix
        Volume form plus weighted boundary forms (left-hand side).
    rhs : csr_matrix
        Boundary form of the eigenvalue trace (right-hand side).
    rhs_support : ndarray of int
        DOFs on which ``rhs`` acts, excluding ``constraint_set``.
    constraint_set : ndarray of int
        DOFs pinned to zero.
    gram : csr_matrix
        Inner product used for normalization.
    """

    lhs: sparse.csr_matrix
    rhs: sparse.csr_matrix
    rhs_support: np.ndarray
    constraint_set: np.ndarray
    gram: sparse.csr_matrix
    space: FESpace
    problem: object
    info: dict = field(default_factory=dict)

    @property
    def free_dofs(self):
        mask = np.ones(self.space.ndof, bool)
        mask[self.constraint_set] = False
        return np.flatnonzero(mask)


def _triplets_to_csr(rows, cols, vals, n):
    # sort by index, then value, and sum duplicates ourselves so the result
    # does not depend on the cell numbering
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    start = np.flatnonzero(np.r_[True, (np.diff(rows) != 0) | (np.diff(cols) != 0)])
    summed = np.add.reduceat(vals, start)
    return sparse.csr_matrix((summed, (rows[start], cols[start])), shape=(n, n))


def volume_form(space):
    """Top-order volume form: ``∫∇u·∇v`` (k=1) or ``∫D²u:D²v`` (k=2)."""
    dofs = space.cell_dofs()
    if space.k == 1:
        Ke = p1_stiffness(space.mesh.vertices[space.mesh.cells])
    else:
        p = space.mesh.vertices[space.mesh.cells]
        sizes = p[:, 2] - p[:, 0]
        cache, Ke = {}, np.empty((len(dofs), 16, 16))
        for c, (hx, hy) in enumerate(sizes):
            key = (float(hx), float(hy))
            if key not in cache:
                cache[key] = hermite_hessian_matrix(hx, hy)
            Ke[c] = cache[key]
    n = dofs.shape[1]
    rows = np.repeat(dofs, n, axis=1).ravel()
    cols = np.tile(dofs, (1, n)).ravel()
    return _triplets_to_csr(rows, cols, Ke.ravel(), space.ndof)


def boundary_form(space, m):
    """``∫_∂Ω ∂^m u/∂ν^m ∂^m v/∂ν^m`` by the exact boundary Gauss rule."""
    T = space.trace_matrix(m)
    return (T.T @ sparse.diags(space.param.weights) @ T).tocsr()


def _support(M, tol=0.0):
    d = np.asarray(abs(M).sum(axis=1)).ravel()
    return np.flatnonzero(d > tol)


def _symmetrize(M):
    return ((M + M.T) * 0.5).tocsr()


def _check_element(k, mesh):
    want = P1 if k == 1 else C1RECT
    if not isinstance(mesh, Mesh2D):
        raise InvalidArgument("finite-element assembly needs a Mesh2D")
    if mesh.element_type != want:
        raise InvalidArgument(f"k={k} needs {want} elements, mesh has {mesh.element_type}")


def assemble(spec, mesh, space=None):
    """Assemble the forms of a member of the Steklov family on a mesh.

    Parameters
    ----------
    spec : SteklovProblemSpec
        ``k = 1`` requires P1 triangles, ``k = 2`` Hermite rectangles.
    mesh : Mesh2D
    space : FESpace, optional
        Reuse an existing space (and its cached trace matrices).
    """
    if not isinstance(spec, SteklovProblemSpec):
        raise InvalidArgument("assemble expects a SteklovProblemSpec")
    if spec.k not in (1, 2):
        raise InvalidArgument("finite elements are available for k = 1, 2 only")
    _check_element(spec.k, mesh)
    space = space or FESpace(mesh)
    vol = volume_form(space)
    lhs = vol.copy()
    for j, b in spec.weights.items():
        lhs = lhs + b * boundary_form(space, j)
    rhs = boundary_form(space, spec.ell)
    lhs, rhs = _symmetrize(lhs), _symmetrize(rhs)
    return AssembledForms(lhs, rhs, _support(rhs), np.array([], int), (lhs + rhs).tocsr(),
                          space, spec, {"ndof": space.ndof})


def assemble_auxiliary(mesh, ell, m, space=None):
    """Forms of the auxiliary problem on ``{γ_ell u = 0}`` with eigenvalue on ``γ_m``.

    The constraint pins every DOF in the support of the ``ell``-trace; on
    Hermite rectangles these DOFs carry exactly the ``ell``-trace, so the
    pinned subspace is the discrete space with vanishing ``ell``-trace.
    """
    problem = AuxiliaryProblemSpec(ell, m, mesh)
    _check_element(2, mesh)
    space = space or FESpace(mesh)
    vol = _symmetrize(volume_form(space))
    b = {j: _symmetrize(boundary_form(space, j)) for j in (0, 1)}
    constraint = _support(b[ell])
    support = np.setdiff1d(_support(b[m]), constraint)
    gram = (vol + b[0] + b[1]).tocsr()
    return AssembledForms(vol, b[m], support, constraint, gram, space, problem,
                          {"ndof": space.ndof, "n_constrained": int(constraint.size)})
