"""Semi-analytic Steklov spectra on disks by separation of variables.

Every angular mode ``n`` (cosine and sine) is handled independently.  The
harmonic problem uses the single radial profile ``(r/R)**n``.  The
biharmonic problems use the two regular biharmonic profiles
``(r/R)**n`` and ``(r/R)**(n+2)``; singular profiles are excluded because an
H^2 function cannot carry them at the centre.  Restricted to one mode the
right-hand boundary form has rank one, so each mode is reduced onto its
trace direction by a 2x2 Schur complement and contributes exactly one
eigenvalue per trigonometric factor.

The volume form ``∫ D²u : D²φ`` (Frobenius contraction of Hessians) is
evaluated by adaptive radial quadrature; boundary forms are point
evaluations at ``r = R`` times exact angular integrals.
"""

from __future__ import annotations

import itertools
import logging
from math import comb
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.integrate import quad

from .errors import InvalidArgument
from .geometry import DiskDomain, build_disk, node_angles
from .spectrum import AuxiliaryProblemSpec, SteklovProblemSpec, finalize

log = logging.getLogger(__name__)

QUAD_TOL = 1e-12


def _falling(a, m):
    out = 1.0
    for i in range(m):
        out *= a - i
    return out


def angular_weights(n):
    """``(∫cos², ∫sin²)`` over one turn for the mode ``n`` cosine factor.

    For ``n = 0`` the sine factor vanishes identically.
    """
    return (2 * np.pi, 0.0) if n == 0 else (np.pi, np.pi)


def _hessian_parts(profile, n, rho):
    """Polar Hessian components of ``f(ρ) trig(nθ)`` without the trig factor.

    ``profile`` maps exponents ``a`` to coefficients of ``ρ**a``; the three
    returned arrays multiply ``cos²``-, ``cos²``- and ``sin²``-type angular
    factors respectively: ``u_rr``, ``u_r/r + u_θθ/r²`` and
    ``n (u_r/r - u/r²)``.  Each monomial contributes ``κ(a) ρ**(a-2)`` with
    an exact integer ``κ``, so no cancellation happens near the origin.
    """
    rr = np.zeros_like(rho)
    tt = np.zeros_like(rho)
    rt = np.zeros_like(rho)
    for a, c in profile.items():
        if c == 0:
            continue
        p = rho ** (a - 2)
        rr = rr + c * a * (a - 1) * p
        tt = tt + c * (a - n * n) * p
        rt = rt + c * n * (a - 1) * p
    return rr, tt, rt


def hessian_form(profile_u, profile_v, n, R=1.0, tol=QUAD_TOL):
    """``∫_disk D²u : D²v`` for ``u = f(r) trig(nθ)``, ``v = g(r) trig(nθ)``.

    Profiles are dicts ``{a: c}`` describing ``Σ c (r/R)**a``.  The radial
    integral is computed by adaptive quadrature in ``ρ = r/R``.
    """
    cw, sw = angular_weights(n)

    def integrand(rho):
        rho = np.asarray(rho, float)
        ur, ut, us = _hessian_parts(profile_u, n, rho)
        vr, vt, vs = _hessian_parts(profile_v, n, rho)
        return ((ur * vr + ut * vt) * cw + 2.0 * us * vs * sw) * rho

    val, _ = quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=tol, limit=400)
    return val / (R * R)


def boundary_derivative(a, m, R=1.0):
    """``∂^m/∂r^m (r/R)**a`` at ``r = R``."""
    return _falling(a, m) / R ** m


@dataclass
class DiskModeSpace:
    """Coefficient space of the per-mode radial bases on a disk.

    Coefficient vectors are laid out mode by mode in the order
    ``(0, cos), (1, cos), (1, sin), (2, cos), ...``; inside a mode the
    entries multiply ``(r/R)**a`` for each exponent in ``powers(n)``.
    """

    disk: DiskDomain
    param: object
    n_modes: int
    k: int

    def __post_init__(self):
        self.modes = [(0, "c")] + [(n, kind) for n in range(1, self.n_modes + 1)
                                    for kind in ("c", "s")]
        self.npow = 1 if self.k == 1 else 2
        self.ndof = len(self.modes) * self.npow
        self._traces = {}

    @property
    def R(self):
        return self.disk.radius

    def powers(self, n):
        return [n] if self.k == 1 else [n, n + 2]

    def mode_slice(self, i):
        return slice(i * self.npow, (i + 1) * self.npow)

    def mode_index(self, n, kind="c"):
        return 0 if n == 0 else 2 * n - 1 + (kind == "s")

    def trace_matrix(self, m):
        if m not in self._traces:
            theta = node_angles(self.param)
            T = np.zeros((self.param.n_nodes, self.ndof))
            for i, (n, kind) in enumerate(self.modes):
                trig = np.cos(n * theta) if kind == "c" else np.sin(n * theta)
                for p, a in enumerate(self.powers(n)):
                    T[:, i * self.npow + p] = boundary_derivative(a, m, self.R) * trig
            self._traces[m] = T
        return self._traces[m]

    def coefficients(self, terms):
        """Coefficient vector of ``Σ c (r/R)**a trig(nθ)``.

        ``terms`` is an iterable of ``(n, kind, a, c)`` with ``a`` one of the
        exponents of mode ``n``.
        """
        u = np.zeros(self.ndof)
        for n, kind, a, c in terms:
            if n > self.n_modes:
                raise InvalidArgument(f"mode {n} exceeds the space's {self.n_modes} modes")
            pw = self.powers(n)
            if a not in pw:
                raise InvalidArgument(f"exponent {a} is not in the basis of mode {n}")
            u[self.mode_index(n, kind) * self.npow + pw.index(a)] += c
        return u

    def evaluate(self, u, r, theta):
        """Point values of the field with coefficients ``u`` at polar ``(r, θ)``."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        out = np.zeros(r.shape)
        for i, (n, kind) in enumerate(self.modes):
            trig = np.cos(n * theta) if kind == "c" else np.sin(n * theta)
            for p, a in enumerate(self.powers(n)):
                c = u[i * self.npow + p]
                if c:
                    out += c * (r / self.R) ** a * trig
        return out

    # -- per-mode forms ----------------------------------------------------------
    def boundary_block(self, n, m):
        """``∫_∂ ∂_r^m u ∂_r^m v`` on the mode-``n`` profiles."""
        cw = angular_weights(n)[0]
        t = np.array([boundary_derivative(a, m, self.R) for a in self.powers(n)])
        return self.R * cw * np.outer(t, t)

    def volume_block(self, n):
        """Top-order volume form: gradient form for k=1, Hessian form for k=2."""
        pw = self.powers(n)
        if self.k == 1:
            # ∫|∇ (r/R)^n trig|² = n ∫trig², exact
            return np.array([[n * angular_weights(n)[0]]])
        return _hessian_block(n, pw[0], pw[1], self.R)


@lru_cache(maxsize=4096)
def _hessian_block(n, a, b, R):
    K = np.empty((2, 2))
    K[0, 0] = hessian_form({a: 1.0}, {a: 1.0}, n, R)
    K[0, 1] = K[1, 0] = hessian_form({a: 1.0}, {b: 1.0}, n, R)
    K[1, 1] = hessian_form({b: 1.0}, {b: 1.0}, n, R)
    return K


def _make_space(R, n_modes, k, n_boundary_samples=None, param=None):
    if not R > 0:
        raise InvalidArgument("radius must be positive")
    if int(n_modes) < 1:
        raise InvalidArgument("need at least one angular mode")
    if param is None:
        n_samples = n_boundary_samples or max(16, 4 * int(n_modes) + 8)
        if n_samples <= 2 * n_modes:
            raise InvalidArgument("need more than 2*n_modes boundary samples for exact quadrature")
        disk, param = build_disk(R, n_samples)
    else:
        disk = DiskDomain(float(R))
    return DiskModeSpace(disk, param, int(n_modes), k)


def _block_diag(blocks):
    return sparse.block_diag(blocks, format="csr")


def disk_forms(space, weights, rhs_order):
    """Global block-diagonal ``(volume, lhs, rhs, gram)`` of a disk problem.

    ``weights`` maps boundary orders to the left-hand weights; the gram
    matrix is ``lhs + rhs``.
    """
    vol, lhs, rhs = [], [], []
    for n, _ in space.modes:
        K = space.volume_block(n)
        A = K.copy()
        for j, b in weights.items():
            A = A + b * space.boundary_block(n, j)
        vol.append(K)
        lhs.append(A)
        rhs.append(space.boundary_block(n, rhs_order))
    lhs, rhs = _block_diag(lhs), _block_diag(rhs)
    return _block_diag(vol), lhs, rhs, (lhs + rhs).tocsr()


def laplace_steklov_disk(R, n_modes, n_boundary_samples=None, param=None):
    """Steklov spectrum of the Laplacian on the disk of radius ``R``.

    Eigenvalues are ``0`` (constants) and ``n / R`` twice for ``n = 1..n_modes``,
    with eigenfunctions ``r**n cos nθ`` and ``r**n sin nθ`` normalized in the
    H^1_∂ norm.
    """
    space = _make_space(R, n_modes, 1, n_boundary_samples, param)
    problem = SteklovProblemSpec(1, 0, (), space.disk)
    _, lhs, rhs, gram = disk_forms(space, {}, 0)
    sigma = np.array([n / space.R for n, _ in space.modes])
    V = sparse.identity(space.ndof, format="csc")
    # node 0 sits at θ=0 and node 1 at a small positive angle, so every raw
    # basis trace already has a positive first significant sample
    return finalize(problem, space, sigma, V, gram, lhs, rhs,
                    basis_id=f"disk-laplace:R={space.R:g}:modes={space.n_modes}",
                    info={"n_modes": space.n_modes}, fix_signs=param is not None)


def _schur_mode(A, B, t):
    """Finite eigenpair of ``A x = σ B x`` on a 2-dim mode with ``B = c t tᵀ``.

    Returns ``(sigma, x)`` or ``None`` when the complement of the trace
    direction carries no energy (singular reduction).
    """
    nt = np.hypot(*t)
    if nt == 0:
        return None
    v1 = t / nt ** 2
    v2 = np.array([t[1], -t[0]]) / nt
    a11, a12, a22 = v1 @ A @ v1, v1 @ A @ v2, v2 @ A @ v2
    b11 = v1 @ B @ v1
    if a22 <= 1e-14 * max(abs(a11), 1.0) or b11 <= 0:
        return None
    return (a11 - a12 * a12 / a22) / b11, v1 - (a12 / a22) * v2


def _solve_modes(fn, modes, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, modes))
    return [fn(m) for m in modes]


def biharmonic_steklov_disk(spec, n_modes, n_boundary_samples=None, param=None, workers=1):
    """Spectrum of the k=2 Steklov problem of order ``spec.ell`` on a disk.

    Angular modes ``0..n_modes`` are solved; a few further modes are solved
    to certify the cutoff, and only eigenvalues strictly below the smallest
    eigenvalue of the uncomputed modes are kept.

    Parameters
    ----------
    spec : SteklovProblemSpec
        Must have ``k == 2`` and a :class:`DiskDomain` (or radius) domain.
    n_modes : int
        Highest angular mode solved.
    workers : int
        Mode solves are independent and may run concurrently; the merge is a
        deterministic sort.
    """
    if spec.k != 2:
        raise InvalidArgument("biharmonic_steklov_disk needs k = 2")
    R = _radius(spec.domain)
    space = _make_space(R, n_modes, 2, n_boundary_samples, param)
    weights = spec.weights
    ell = spec.ell

    def mode(n):
        K = space.volume_block(n)
        A = K + sum(b * space.boundary_block(n, j) for j, b in weights.items())
        B = space.boundary_block(n, ell)
        t = np.array([boundary_derivative(a, ell, space.R) for a in space.powers(n)])
        return _schur_mode(A, B, t)

    sols = _solve_modes(mode, range(space.n_modes + 4), workers)
    extra = [s[0] for s in sols[space.n_modes + 1:] if s is not None]
    cutoff = min(extra) if extra else np.inf
    sigma, cols, rows, vals, dropped = [], [], [], [], []
    for i, (n, kind) in enumerate(space.modes):
        sol = sols[n]
        if sol is None or sol[0] >= cutoff:
            dropped.append((n, kind))
            continue
        s, x = sol
        c = len(sigma)
        sigma.append(s)
        rows.extend(range(i * 2, i * 2 + 2))
        cols.extend([c, c])
        vals.extend(x)
    if dropped:
        log.info("modes without certified eigenvalue: %s", dropped)
    V = sparse.csc_matrix((vals, (rows, cols)), shape=(space.ndof, len(sigma)))
    _, lhs, rhs, gram = disk_forms(space, weights, ell)
    scale = max(abs(np.asarray(sigma)).max(), 1.0) * 1e-3
    return finalize(spec, space, sigma, V, gram, lhs, rhs,
                    basis_id=f"disk-biharmonic:R={space.R:g}:ell={ell}:modes={space.n_modes}",
                    info={"n_modes": space.n_modes, "certified_cutoff": float(cutoff),
                          "dropped_modes": dropped},
                    zero_scale=scale)


def disk_auxiliary(R, ell, m, n_modes, n_boundary_samples=None, param=None, workers=1):
    """Auxiliary biharmonic problem on the disk: zero ``ell``-trace, eigenvalue on ``m``.

    Each mode's trial space is the one-dimensional subspace of
    ``span{(r/R)**n, (r/R)**(n+2)}`` with vanishing ``ell``-trace.  The
    eigenvalue is the Rayleigh quotient of the Hessian form over the
    ``m``-boundary form; eigenfunctions are normalized in the H^2_∂ norm.
    """
    problem = AuxiliaryProblemSpec(ell, m, DiskDomain(float(R)))
    space = _make_space(R, n_modes, 2, n_boundary_samples, param)

    def mode(n):
        t = np.array([boundary_derivative(a, ell, space.R) for a in space.powers(n)])
        w = np.array([t[1], -t[0]])
        w /= np.hypot(*w)
        K = space.volume_block(n)
        B = space.boundary_block(n, m)
        den = w @ B @ w
        if den <= 1e-14 * max(w @ K @ w, 1.0):
            return None
        return (w @ K @ w) / den, w

    sols = _solve_modes(mode, range(space.n_modes + 1), workers)
    sigma, rows, cols, vals = [], [], [], []
    for i, (n, _) in enumerate(space.modes):
        sol = sols[n]
        if sol is None:
            continue
        c = len(sigma)
        sigma.append(sol[0])
        rows.extend([2 * i, 2 * i + 1])
        cols.extend([c, c])
        vals.extend(sol[1])
    V = sparse.csc_matrix((vals, (rows, cols)), shape=(space.ndof, len(sigma)))
    vol, _, _, _ = disk_forms(space, {}, m)
    bm = _block_diag([space.boundary_block(n, m) for n, _ in space.modes])
    b0 = _block_diag([space.boundary_block(n, 0) for n, _ in space.modes])
    b1 = _block_diag([space.boundary_block(n, 1) for n, _ in space.modes])
    gram = (vol + b0 + b1).tocsr()
    # the weak equation holds against test functions of the constrained space
    return finalize(problem, space, sigma, V, gram, vol, bm,
                    basis_id=f"disk-aux:R={space.R:g}:ell={ell}:m={m}:modes={space.n_modes}",
                    info={"n_modes": space.n_modes}, test_basis=V.copy())


def _radius(domain):
    if isinstance(domain, DiskDomain):
        return domain.radius
    if isinstance(domain, (int, float)):
        return float(domain)
    raise InvalidArgument("disk solvers need a DiskDomain")


# -- polynomial kernel checker ------------------------------------------------------

def _poly_str(poly):
    terms = []
    for (i, j), c in sorted(poly.items()):
        if c == 0:
            continue
        mono = "*".join(f"{v}^{e}" if e > 1 else v for v, e in (("x", i), ("y", j)) if e)
        terms.append(f"{c:g}" + (f"*{mono}" if mono else ""))
    return " + ".join(terms) or "0"


def _poly_diff(poly, dx, dy):
    out = {}
    for (i, j), c in poly.items():
        if i >= dx and j >= dy:
            out[(i - dx, j - dy)] = out.get((i - dx, j - dy), 0.0) + c * _falling(i, dx) * _falling(j, dy)
    return out


def _poly_eval(poly, x, y):
    return sum(c * x ** i * y ** j for (i, j), c in poly.items())


def _radial_derivative_on_circle(poly, order, R, theta):
    """``∂^order u / ∂r^order`` at ``r = R`` along each ray ``θ``."""
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros_like(theta)
    for (i, j), coef in poly.items():
        out += coef * c ** i * s ** j * _falling(i + j, order) * R ** (i + j - order)
    return out


def kernel_form(poly, k, ell, R, beta=None, n_theta=None):
    """Left-hand quadratic form of the order-``k`` family evaluated at ``φ = u``.

    ``poly`` is a dict ``{(i, j): c}`` for ``Σ c x^i y^j``.  Normal
    derivatives on the circle are derivatives along rays.  The volume term
    uses the full tensor contraction ``Σ_{|α|=k} k!/α! (D^α u)²``.
    """
    beta = {j: 1.0 for j in range(k) if j != ell} if beta is None else dict(beta)
    deg = max((i + j for i, j in poly), default=0)
    n_theta = n_theta or max(16, 4 * deg + 8)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    total = 0.0
    for j, b in beta.items():
        g = _radial_derivative_on_circle(poly, j, R, theta)
        total += b * R * (2 * np.pi / n_theta) * np.sum(g * g)
    # volume term by tensor Gauss (radial) x trapezoid (angular) quadrature
    nr = max(8, deg + 4)
    xg, wg = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * R * (xg + 1)
    wr = 0.5 * R * wg * r
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    X, Y = rr * np.cos(tt), rr * np.sin(tt)
    dens = np.zeros_like(X)
    for a in range(k + 1):
        d = _poly_diff(poly, a, k - a)
        if d:
            dens += comb(k, a) * _poly_eval(d, X, Y) ** 2
    total += np.sum(wr[:, None] * dens) * (2 * np.pi / n_theta)
    return float(total)


@dataclass
class KernelReport:
    """Outcome of :func:`polynomial_kernel_check`.

    ``kernel`` holds the candidates (and basis vectors of the null space of
    the form on the candidate span) with residual below the threshold;
    ``residuals`` lists every candidate with its form value.
    """

    k: int
    ell: int
    R: float
    kernel: list
    residuals: list
    example: tuple | None = None


def polynomial_kernel_check(k, ell, R, beta=None, threshold=1e-10, example=None):
    """Search radial and monomial polynomials of degree < k for zero-eigenvalue fields.

    A polynomial ``u`` of degree at most ``k-1`` is an eigenfunction for
    eigenvalue 0 exactly when the left-hand form vanishes at ``φ = u``.

    Parameters
    ----------
    example : dict, optional
        Extra candidate whose residual is reported separately.
    """
    if not 1 <= k <= 4:
        raise InvalidArgument("kernel checker supports 1 <= k <= 4")
    if not 0 <= ell <= k - 1:
        raise InvalidArgument("ell out of range")
    cands = []
    for d in range(0, k, 2):
        # |x|^d expanded
        poly = {}
        for i in range(d // 2 + 1):
            poly[(2 * i, d - 2 * i)] = float(comb(d // 2, i))
        cands.append(poly)
    for tot in range(1, k):
        for i in range(tot + 1):
            cands.append({(i, tot - i): 1.0})
    residuals = [(_poly_str(p), kernel_form(p, k, ell, R, beta)) for p in cands]
    kernel = [(name, res) for name, res in residuals if abs(res) <= threshold]
    # null directions of the form on the span of the monomial candidates
    monos = [{(i, t - i): 1.0} for t in range(k) for i in range(t + 1)]
    Q = np.empty((len(monos), len(monos)))
    for a, b in itertools.combinations_with_replacement(range(len(monos)), 2):
        pa, pb = monos[a], monos[b]
        both = {key: pa.get(key, 0) + pb.get(key, 0) for key in set(pa) | set(pb)}
        Q[a, b] = Q[b, a] = 0.5 * (kernel_form(both, k, ell, R, beta)
                                   - kernel_form(pa, k, ell, R, beta)
                                   - kernel_form(pb, k, ell, R, beta))
    w, U = np.linalg.eigh(Q)
    for col in np.flatnonzero(w <= threshold * max(1.0, w.max())):
        vec = U[:, col] / U[np.argmax(np.abs(U[:, col])), col]
        poly = {}
        for coef, mono in zip(vec, monos):
            if abs(coef) > 1e-12:
                (key, _), = mono.items()
                poly[key] = round(float(coef), 12)
        name = _poly_str(poly)
        if all(name != n for n, _ in kernel):
            kernel.append((name, float(kernel_form(poly, k, ell, R, beta))))
    ex = None
    if example is not None:
        ex = (_poly_str(example), kernel_form(example, k, ell, R, beta))
    return KernelReport(k, ell, float(R), kernel, residuals, ex)
