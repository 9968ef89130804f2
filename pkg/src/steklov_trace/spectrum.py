"""Problem descriptions and the :class:`Spectrum` container shared by all solvers.

A spectrum lives on a *space*: any object exposing

``param``
    the :class:`~steklov_trace.geometry.BoundaryParam` on which boundary
    traces are sampled,
``ndof``
    the length of coefficient vectors,
``k``
    the Sobolev order of the discretization,
``trace_matrix(m)``
    the linear map from coefficient vectors to samples of the ``m``-th
    normal derivative on the boundary.

Both the semi-analytic disk bases and the finite-element spaces satisfy
this protocol, so expansions, extensions and compatibility checks are
written once against it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import InvalidArgument, InvariantViolation
from .serialize import dumps

ZERO_CLAMP = 1e-9
GROUP_RTOL = 1e-6


@dataclass(frozen=True)
class SteklovProblemSpec:
    """Member ``(k, ell, beta)`` of the multi-parameter Steklov family.

    ``beta`` maps each trace order ``j != ell`` to its positive boundary
    weight; missing orders default to 1.
    """

    k: int
    ell: int = 0
    beta: tuple = ()
    domain: object = None

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgument("order k must be >= 1")
        if not 0 <= self.ell <= self.k - 1:
            raise InvalidArgument(f"ell must lie in 0..{self.k - 1}, got {self.ell}")
        beta = dict(self.beta) if not isinstance(self.beta, dict) else self.beta
        for j, b in beta.items():
            if j == self.ell or not 0 <= j <= self.k - 1:
                raise InvalidArgument(f"beta given for invalid trace order {j}")
            if not b > 0:
                raise InvalidArgument("beta weights must be strictly positive")
        full = tuple(sorted((j, float(beta.get(j, 1.0))) for j in range(self.k) if j != self.ell))
        object.__setattr__(self, "beta", full)

    @property
    def weights(self):
        """Boundary weights of the left-hand form, as a dict ``j -> beta_j``."""
        return dict(self.beta)

    @property
    def basis_trace(self):
        return self.ell

    @property
    def is_auxiliary(self):
        return False

    def describe(self):
        return {"k": self.k, "ell": self.ell, "beta": {str(j): b for j, b in self.beta}}


@dataclass(frozen=True)
class AuxiliaryProblemSpec:
    """Second-order auxiliary problem posed on functions with zero ``ell``-trace.

    The eigenvalue sits in front of the boundary form of order ``m``.
    """

    ell: int
    m: int
    domain: object = None
    k: int = 2

    def __post_init__(self):
        if {self.ell, self.m} != {0, 1}:
            raise InvalidArgument("auxiliary problems need {ell, m} = {0, 1}")

    @property
    def basis_trace(self):
        return self.m

    @property
    def is_auxiliary(self):
        return True

    def describe(self):
        return {"k": 2, "ell": self.ell, "m": self.m, "auxiliary": True}


def multiplicity_groups(eigenvalues, rtol=GROUP_RTOL):
    """Index ranges ``(start, stop)`` of numerically equal eigenvalues."""
    sig = np.asarray(eigenvalues, float)
    groups, start = [], 0
    for i in range(1, sig.size + 1):
        if i == sig.size or abs(sig[i] - sig[i - 1]) > rtol * max(abs(sig[i]), abs(sig[i - 1]), 1e-12):
            groups.append((start, i))
            start = i
    return groups


def _quad(M, u, v=None):
    v = u if v is None else v
    return np.asarray(u.T @ (M @ v))


@dataclass(eq=False)
class Spectrum:
    """Ordered eigenpairs of a Steklov-type problem on a given space.

    Parameters
    ----------
    problem : SteklovProblemSpec or AuxiliaryProblemSpec
    eigenvalues : ndarray of shape (n,)
        Nondecreasing, nonnegative.
    eigenvectors : ndarray or sparse matrix of shape (ndof, n)
        Columns orthonormal in the inner product ``gram``.
    space : object
        See the module docstring for the required protocol.
    gram : sparse matrix of shape (ndof, ndof)
        The inner product used for normalization and Steklov expansions:
        the left-hand form plus the right-hand form of the problem, which is
        the H^k_∂ product when every boundary weight equals 1.
    lhs, rhs : sparse matrix, optional
        The two sides of the eigenproblem, kept for residual diagnostics.
    test_basis : sparse matrix, optional
        Columns spanning the test space when it is smaller than the
        coefficient space (constrained problems); residuals are projected
        onto it.
    """

    problem: object
    eigenvalues: np.ndarray
    eigenvectors: object
    space: object
    gram: object
    lhs: object = None
    rhs: object = None
    basis_id: str = ""
    info: dict = field(default_factory=dict)
    test_basis: object = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, float)
        self.eigenvalues.setflags(write=False)

    def __len__(self):
        return self.eigenvalues.size

    @property
    def param(self):
        return self.space.param

    @property
    def basis_trace(self):
        return self.problem.basis_trace

    @property
    def multiplicity_groups(self):
        return multiplicity_groups(self.eigenvalues)

    @cached_property
    def boundary_traces(self):
        """Dict ``m -> ndarray (n_nodes, n)`` of sampled normal derivatives."""
        V = self.eigenvectors
        out = {}
        for m in range(self.space.k):
            T = self.space.trace_matrix(m)
            tr = T @ V
            out[m] = np.asarray(tr.toarray() if sparse.issparse(tr) else tr)
        return out

    @cached_property
    def hat_traces(self):
        """Normalized traces ``sqrt(1 + sigma_j) * gamma(u_j)``, shape (n_nodes, n)."""
        return self.boundary_traces[self.basis_trace] * np.sqrt(1.0 + self.eigenvalues)

    def vector(self, j):
        """Coefficient vector of the eigenfunction with 0-based index ``j``."""
        col = self.eigenvectors[:, j]
        return np.asarray(col.toarray()).ravel() if sparse.issparse(col) else np.asarray(col)

    def inner(self, u, v):
        return float(_quad(self.gram, np.asarray(u), np.asarray(v)))

    # -- invariants ------------------------------------------------------------
    def diagnostics(self, n=None):
        """Residuals and orthonormality defects of the first ``n`` pairs."""
        n = len(self) if n is None else min(n, len(self))
        V = self.eigenvectors[:, :n]
        V = V.toarray() if sparse.issparse(V) else np.asarray(V)
        G = _quad(self.gram, V)
        H = self.hat_traces[:, :n]
        Gh = (H * self.param.weights[:, None]).T @ H
        report = {
            "n": n,
            "gram_deviation": float(np.max(np.abs(G - np.eye(n)))) if n else 0.0,
            "hat_gram_deviation": float(np.max(np.abs(Gh - np.eye(n)))) if n else 0.0,
            "min_eigenvalue": float(self.eigenvalues.min()) if n else 0.0,
            "sorted": bool(np.all(np.diff(self.eigenvalues) >= 0)),
        }
        if self.lhs is not None and self.rhs is not None and n:
            sig = self.eigenvalues[:n]
            R = self.lhs @ V - (self.rhs @ V) * sig
            if self.test_basis is not None:
                R = np.asarray(self.test_basis.T @ R)
            scale = (spla.norm(self.lhs, 1) if sparse.issparse(self.lhs)
                     else np.linalg.norm(self.lhs, 1))
            mscale = (spla.norm(self.rhs, 1) if sparse.issparse(self.rhs)
                      else np.linalg.norm(self.rhs, 1))
            rel = np.linalg.norm(R, axis=0) / ((scale + sig * mscale) * np.linalg.norm(V, axis=0))
            report["max_relative_residual"] = float(rel.max())
        report.update(self.info)
        return report

    def check_invariants(self, n=None, tol=1e-8):
        """Raise :class:`InvariantViolation` if orthonormality or ordering fails."""
        rep = self.diagnostics(n)
        bad = []
        if not rep["sorted"]:
            bad.append("eigenvalues not sorted")
        if rep["min_eigenvalue"] < 0:
            bad.append("negative eigenvalue")
        if rep["gram_deviation"] > tol:
            bad.append(f"eigenvector Gram deviation {rep['gram_deviation']:.3g}")
        if rep["hat_gram_deviation"] > tol:
            bad.append(f"normalized trace Gram deviation {rep['hat_gram_deviation']:.3g}")
        if rep.get("max_relative_residual", 0.0) > tol:
            bad.append(f"weak-form residual {rep['max_relative_residual']:.3g}")
        if bad:
            raise InvariantViolation("; ".join(bad), rep)
        return rep

    # -- export -------------------------------------------------------------------
    def to_csv(self, n=None):
        """CSV text with columns ``j, sigma, multiplicity_group`` (1-based ``j``).

        ``n`` limits the output to the first ``n`` pairs; groups are computed
        on the full spectrum so a truncated group keeps its number.
        """
        n = len(self) if n is None else min(int(n), len(self))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "sigma", "multiplicity_group"])
        group_of = np.empty(len(self), int)
        for g, (a, b) in enumerate(self.multiplicity_groups):
            group_of[a:b] = g + 1
        for j, (s, g) in enumerate(zip(self.eigenvalues[:n], group_of[:n]), start=1):
            w.writerow([j, format(float(s), ".17g"), int(g)])
        return buf.getvalue()

    def to_json(self, n_traces=None):
        """JSON companion carrying boundary traces sampled on the nodes."""
        n = len(self) if n_traces is None else min(n_traces, len(self))
        data = {
            "basis": self.basis_id,
            "problem": self.problem.describe(),
            "eigenvalues": self.eigenvalues.tolist(),
            "multiplicity_groups": [list(g) for g in self.multiplicity_groups],
            "node_arclengths": self.param.node_arclengths.tolist(),
            "boundary_traces": {str(m): tr[:, :n].T.tolist()
                                for m, tr in self.boundary_traces.items()},
        }
        return dumps(data)


def finalize(problem, space, sigma, V, gram, lhs=None, rhs=None, basis_id="", info=None,
             zero_scale=1.0, test_basis=None, fix_signs=True):
    """Sort, clamp, normalize and sign-fix raw eigenpairs into a :class:`Spectrum`.

    ``sigma`` values with magnitude below ``ZERO_CLAMP * zero_scale`` become
    exactly 0; anything more negative is an invariant violation.  Pass
    ``fix_signs=False`` only when the raw vectors already satisfy the sign
    convention, which avoids forming the trace matrix.
    """
    sigma = np.asarray(sigma, float).copy()
    tiny = np.abs(sigma) <= ZERO_CLAMP * zero_scale
    sigma[tiny] = 0.0
    if np.any(sigma < 0):
        raise InvariantViolation(f"negative eigenvalue {sigma.min():.3g}")
    order = np.argsort(sigma, kind="stable")
    sigma = sigma[order]
    V = V[:, order]
    is_sparse = sparse.issparse(V)
    if is_sparse:
        V = sparse.csc_matrix(V)
    norms = np.sqrt(np.abs(np.asarray((V.multiply(gram @ V)).sum(axis=0)).ravel()
                           if is_sparse else np.einsum("ij,ij->j", V, gram @ V)))
    signs = np.ones(sigma.size)
    if fix_signs:
        T = space.trace_matrix(problem.basis_trace)
        tr = T @ V
        tr = np.asarray(tr.toarray() if sparse.issparse(tr) else tr)
    for j in range(sigma.size if fix_signs else 0):
        hit = np.flatnonzero(np.abs(tr[:, j]) / norms[j] > 1e-10)
        if hit.size and tr[hit[0], j] < 0:
            signs[j] = -1.0
    scale = signs / norms
    V = V @ sparse.diags(scale) if is_sparse else V * scale
    if is_sparse:
        V = sparse.csc_matrix(V)
    return Spectrum(problem, sigma, V, space, gram, lhs, rhs, basis_id, dict(info or {}),
                    test_basis)
