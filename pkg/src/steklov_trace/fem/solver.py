"""Boundary Schur reduction and dense generalized eigensolves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as spla

from ..errors import InvalidArgument, SPDViolation
from ..geometry import DiskDomain, Mesh2D
from ..spectrum import finalize
from .assembly import AssembledForms, assemble, assemble_auxiliary

log = logging.getLogger(__name__)


@dataclass
class ReducedEigenproblem:
    """Dense problem ``S y = σ M y`` on the DOFs where the right-hand side acts.

    ``recovery`` is the dense matrix ``A_ii⁻¹ A_ib``; a reduced vector ``y``
    extends to the free DOFs as ``y`` on the support and ``-recovery @ y``
    on the interior.
    """

    schur: np.ndarray
    mass: np.ndarray
    recovery: np.ndarray
    support: np.ndarray
    interior: np.ndarray
    forms: AssembledForms
    info: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.support.size

    def recover(self, Y):
        """Full DOF vectors (constrained DOFs zero) from reduced vectors."""
        Y = np.atleast_2d(np.asarray(Y, float).T).T
        X = np.zeros((self.forms.space.ndof, Y.shape[1]))
        X[self.support] = Y
        if self.interior.size:
            X[self.interior] = -self.recovery @ Y
        return X


def _factor_spd(A):
    """Sparse LU of a symmetric matrix without pivoting off the diagonal.

    With symmetric mode and a zero pivot threshold the factorization keeps
    diagonal pivots, so ``U`` has a positive diagonal iff ``A`` is SPD.
    """
    lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                   options={"SymmetricMode": True})
    d = lu.U.diagonal()
    if np.any(d <= 0) or not np.all(lu.perm_r == lu.perm_c):
        return lu, False
    return lu, True


def _kernel_direction(A):
    w, V = linalg.eigh(A.toarray() if sparse.issparse(A) else A)
    return V[:, 0]


def reduce(forms):
    """Schur complement of the free DOFs onto the right-hand-side support.

    Raises
    ------
    SPDViolation
        If the interior block is not positive definite; the exception carries
        a near-kernel direction of that block (in interior DOF numbering).
    """
    free = forms.free_dofs
    support = np.intersect1d(forms.rhs_support, free)
    interior = np.setdiff1d(free, support)
    A = forms.lhs
    Abb = A[support][:, support].toarray()
    if interior.size:
        Aii = A[interior][:, interior]
        Aib = A[interior][:, support].toarray()
        try:
            lu, ok = _factor_spd(Aii)
        except RuntimeError:
            ok = False
        if not ok:
            raise SPDViolation("interior block of the left-hand form is not positive definite",
                               kernel=_kernel_direction(Aii) if interior.size <= 3000 else None)
        X = lu.solve(Aib)
        S = Abb - Aib.T @ X
    else:
        X = np.zeros((0, support.size))
        S = Abb
    S = 0.5 * (S + S.T)
    M = forms.rhs[support][:, support].toarray()
    M = 0.5 * (M + M.T)
    return ReducedEigenproblem(S, M, X, support, interior, forms,
                               {"reduced_dim": int(support.size), "interior_dim": int(interior.size)})


def solve_reduced(red, n_eigs=None):
    """Eigenpairs of a reduced problem, recovered and normalized.

    Uses the Cholesky factor ``L`` of the mass matrix to form
    ``C = L⁻¹ S L⁻ᵀ`` and a full symmetric eigendecomposition of ``C``.

    Raises
    ------
    SPDViolation
        If the mass matrix is not positive definite.
    """
    n_eigs = red.dim if n_eigs is None else int(n_eigs)
    if not 1 <= n_eigs <= red.dim:
        raise InvalidArgument(f"n_eigs must lie in 1..{red.dim}")
    try:
        L = linalg.cholesky(red.mass, lower=True)
    except linalg.LinAlgError as exc:
        raise SPDViolation(f"boundary mass matrix is not positive definite: {exc}",
                           kernel=_kernel_direction(red.mass)) from exc
    C = linalg.solve_triangular(L, red.schur, lower=True)
    C = linalg.solve_triangular(L, C.T, lower=True)
    C = 0.5 * (C + C.T)
    w, Z = linalg.eigh(C)
    scale = float(np.max(np.abs(w))) if w.size else 1.0
    w, Z = w[:n_eigs], Z[:, :n_eigs]
    Y = linalg.solve_triangular(L, Z, lower=True, trans="T")
    X = red.recover(Y)
    forms = red.forms
    test_basis = None
    if forms.constraint_set.size:
        free = forms.free_dofs
        test_basis = sparse.csc_matrix((np.ones(free.size), (free, np.arange(free.size))),
                                       shape=(forms.space.ndof, free.size))
    info = dict(red.info)
    info["mass_min_eigenvalue"] = float(linalg.eigvalsh(red.mass)[0]) if red.dim <= 4000 else None
    return finalize(forms.problem, forms.space, w, X, forms.gram, forms.lhs, forms.rhs,
                    basis_id=_basis_id(forms), info=info, zero_scale=scale,
                    test_basis=test_basis)


def _basis_id(forms):
    p = forms.problem
    mesh = forms.space.mesh
    tag = "aux" if p.is_auxiliary else f"k={p.k}"
    extra = f":m={p.m}" if p.is_auxiliary else ""
    return (f"fem-{mesh.element_type}:{tag}:ell={p.ell}{extra}"
            f":nv={mesh.n_vertices}:nc={mesh.n_cells}")


def solve(spec, mesh, n_eigs=None, space=None):
    """Assemble, reduce and solve one member of the Steklov family on a mesh."""
    return solve_reduced(reduce(assemble(spec, mesh, space)), n_eigs)


def solve_auxiliary(domain, ell, m, n_eigs, n_modes=None, space=None, workers=1):
    """Auxiliary spectrum ``η^{ell,m}`` on a Hermite mesh or on a disk.

    Disks are delegated to the per-mode solver; ``n_modes`` defaults to
    ``n_eigs // 2 + 1`` there.
    """
    if ell == m or {ell, m} != {0, 1}:
        raise InvalidArgument("auxiliary problems need {ell, m} = {0, 1}")
    if isinstance(domain, (DiskDomain, int, float)):
        from ..disk_spectral import disk_auxiliary
        R = domain.radius if isinstance(domain, DiskDomain) else float(domain)
        n_modes = n_modes or n_eigs // 2 + 1
        spec = disk_auxiliary(R, ell, m, n_modes, workers=workers)
        return spec
    if not isinstance(domain, Mesh2D):
        raise InvalidArgument("solve_auxiliary expects a Mesh2D or a DiskDomain")
    return solve_reduced(reduce(assemble_auxiliary(domain, ell, m, space)), n_eigs)


@dataclass
class ConvergenceTable:
    """Eigenvalues per refinement level with three-level order estimates.

    ``orders[i, j]`` is the order estimated from levels ``i, i+1, i+2`` for
    eigenvalue ``j`` (NaN when the differences vanish).  ``flags`` lists
    ``(level, j)`` where consecutive differences changed sign.
    """

    h: np.ndarray
    sigma: np.ndarray
    orders: np.ndarray
    flags: list

    def rows(self):
        return [(float(h), s.tolist()) for h, s in zip(self.h, self.sigma)]


def convergence_study(spec, mesh_family, n_eigs=5):
    """Solve ``spec`` on nested meshes and estimate convergence orders.

    Parameters
    ----------
    mesh_family : sequence of Mesh2D or of (Mesh2D, BoundaryParam)
        Ordered from coarse to fine.
    """
    meshes = [m[0] if isinstance(m, tuple) else m for m in mesh_family]
    if len(meshes) < 3:
        raise InvalidArgument("a convergence study needs at least three meshes")
    h = np.array([m.h for m in meshes])
    sigma = np.array([solve(spec, m, n_eigs).eigenvalues[:n_eigs] for m in meshes])
    d = np.diff(sigma, axis=0)
    orders = np.full((len(meshes) - 2, n_eigs), np.nan)
    flags = []
    for i in range(len(meshes) - 2):
        a, b = np.abs(d[i]), np.abs(d[i + 1])
        ok = (a > 0) & (b > 0)
        orders[i, ok] = np.log(a[ok] / b[ok]) / np.log(h[i + 1] / h[i + 2])
        for j in np.flatnonzero(np.sign(d[i]) * np.sign(d[i + 1]) < 0):
            flags.append((i, int(j)))
    if flags:
        log.warning("non-monotone convergence at %s", flags)
    return ConvergenceTable(h, sigma, orders, flags)
