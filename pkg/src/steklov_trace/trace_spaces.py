"""Steklov expansions, weighted trace norms, extension, and membership tests.

Boundary functions are expanded in the normalized traces
``û_j = sqrt(1 + σ_j) γ_ℓ(u_j)`` of a :class:`~steklov_trace.spectrum.Spectrum`.
Two weight conventions coexist and are kept apart on purpose:

``HsA(s)``
    weights ``(1 + σ_j)**(2 s)``, the scale of fractional spaces built on
    the harmonic Steklov basis;
``HkA``
    weights ``(1 + σ_j)``, the single-trace spaces of the higher-order family.

Infinite summability cannot be decided from finitely many terms, so
:func:`classify_membership` returns ``"in"``, ``"out"`` or ``"undecided"``
together with the evidence it used.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .geometry import BoundarySamples
from .serialize import dumps

log = logging.getLogger(__name__)

CAUCHY_TOL = 1e-10
FIT_R2 = 0.99
FIT_SLOPE = 0.1
FIT_WINDOW = 6
MIN_INCREMENTS = 4
MIN_BLOCK_START = 4


@dataclass
class TraceCoefficients:
    """Truncated coefficient sequence ``(g_1, ..., g_N)`` in a trace basis.

    ``spectrum`` is the live basis when available; serialization keeps only
    ``basis_id``.
    """

    basis_id: str
    coeffs: np.ndarray
    spectrum: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, float).ravel()
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidArgument("trace coefficients must be finite")

    @property
    def truncation(self):
        return self.coeffs.size

    @property
    def eigenvalues(self):
        if self.spectrum is None:
            raise InvalidArgument(f"basis {self.basis_id!r} is not attached to a spectrum")
        return self.spectrum.eigenvalues[:self.truncation]

    def __add__(self, other):
        _same_basis(self, other)
        return TraceCoefficients(self.basis_id, self.coeffs + other.coeffs, self.spectrum)

    def __sub__(self, other):
        _same_basis(self, other)
        return TraceCoefficients(self.basis_id, self.coeffs - other.coeffs, self.spectrum)

    def __mul__(self, c):
        return TraceCoefficients(self.basis_id, c * self.coeffs, self.spectrum)

    __rmul__ = __mul__

    def to_json(self):
        return dumps({"basis": self.basis_id, "coeffs": self.coeffs.tolist()})

    @classmethod
    def from_json(cls, text, spectrum=None):
        data = json.loads(text)
        if spectrum is not None and spectrum.basis_id != data["basis"]:
            raise InvalidArgument(f"coefficients belong to basis {data['basis']!r}, "
                                  f"not {spectrum.basis_id!r}")
        return cls(data["basis"], data["coeffs"], spectrum)

    @classmethod
    def unit(cls, spectrum, j, N):
        """Coefficients of ``e_j`` (1-based) truncated at ``N``."""
        c = np.zeros(N)
        c[j - 1] = 1.0
        return cls(spectrum.basis_id, c, spectrum)


def _same_basis(a, b):
    if a.basis_id != b.basis_id or a.truncation != b.truncation:
        raise InvalidArgument("coefficient sequences live in different bases or truncations")


def _check_N(spectrum, N):
    N = len(spectrum) if N is None else int(N)
    if not 0 < N <= len(spectrum):
        raise InvalidArgument(f"truncation {N} exceeds the {len(spectrum)} available modes")
    return N


@dataclass(frozen=True)
class WeightScheme:
    """Weights of a trace norm.

    Parameters
    ----------
    kind : {"HsA", "HkA", "L2"}
    s : float
        Smoothness for ``HsA``; ignored otherwise.
    eigenvalues : array_like or callable, optional
        ``σ_j`` (1-based callable ``j -> σ_j`` or array) used when weighting
        bare sequences; expansions in a spectrum use its own eigenvalues.
    """

    kind: str
    s: float = 0.0
    eigenvalues: object = None

    def __post_init__(self):
        if self.kind not in ("HsA", "HkA", "L2"):
            raise InvalidArgument(f"unknown weight scheme {self.kind!r}")
        if self.kind == "HsA" and self.s < 0:
            raise InvalidArgument("HsA needs s >= 0")

    @classmethod
    def HsA(cls, s, eigenvalues=None):
        return cls("HsA", float(s), eigenvalues)

    @classmethod
    def HkA(cls, eigenvalues=None):
        return cls("HkA", 0.0, eigenvalues)

    @classmethod
    def L2(cls):
        return cls("L2")

    def weights(self, sigma):
        sigma = np.asarray(sigma, float)
        if self.kind == "L2":
            return np.ones_like(sigma)
        if self.kind == "HkA":
            return 1.0 + sigma
        return (1.0 + sigma) ** (2 * self.s)

    def sigma(self, N):
        """``σ_1..σ_N`` from the scheme's own eigenvalue source."""
        if self.kind == "L2":
            return np.zeros(N)
        ev = self.eigenvalues
        if ev is None:
            raise InvalidArgument("this weight scheme carries no eigenvalues")
        if callable(ev):
            return np.asarray(_vectorized(ev, N), float)
        ev = np.asarray(ev, float)
        if ev.size < N:
            raise InvalidArgument(f"weight scheme has only {ev.size} eigenvalues, need {N}")
        return ev[:N]

    def describe(self):
        return {"kind": self.kind, "s": self.s} if self.kind == "HsA" else {"kind": self.kind}


def _vectorized(rule, N):
    j = np.arange(1, N + 1)
    try:
        out = np.asarray(rule(j), float)
        if out.shape == j.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([rule(int(i)) for i in j], float)


# -- expansions ---------------------------------------------------------------------

def steklov_expand(u, spectrum, N=None):
    """Coefficients ``a_j = <u, u_j>`` in the spectrum's energy product.

    ``u`` is a coefficient vector of the spectrum's space (FE DOFs or disk
    mode coefficients).
    """
    N = _check_N(spectrum, N)
    u = np.asarray(u, float).ravel()
    if u.size != spectrum.space.ndof:
        raise InvalidArgument(f"vector of length {u.size} does not match {spectrum.space.ndof} DOFs")
    Gu = spectrum.gram @ u
    V = spectrum.eigenvectors[:, :N]
    a = V.T @ Gu
    return TraceCoefficients(spectrum.basis_id, np.asarray(a).ravel(), spectrum)


def reconstruct_field(c, spectrum):
    """``Σ a_j u_j`` for energy-product coefficients ``a``."""
    V = spectrum.eigenvectors[:, :c.truncation]
    return np.asarray(V @ c.coeffs).ravel()


def boundary_expand(g, spectrum, N=None):
    """Coefficients ``g_j = <g, û_j>_{L²(∂Ω)}`` by boundary quadrature."""
    N = _check_N(spectrum, N)
    if not isinstance(g, BoundarySamples):
        raise InvalidArgument("boundary_expand expects BoundarySamples")
    p = spectrum.param
    if g.param is not p and (g.param.n_nodes != p.n_nodes
                             or not np.allclose(g.param.node_arclengths, p.node_arclengths,
                                                rtol=0, atol=1e-12 * p.total_length)):
        raise InvalidArgument("samples and spectrum use different boundary nodes")
    H = spectrum.hat_traces[:, :N]
    return TraceCoefficients(spectrum.basis_id, H.T @ (p.weights * g.values), spectrum)


def synthesize(c, spectrum):
    """Boundary samples of ``Σ g_j û_j``."""
    H = spectrum.hat_traces[:, :c.truncation]
    return BoundarySamples(spectrum.param, H @ c.coeffs)


def weighted_sum(c, w, sigma=None):
    """Truncated ``Σ w(σ_j) g_j²``."""
    sigma = c.eigenvalues if sigma is None and w.kind != "L2" else sigma
    sigma = np.zeros(c.truncation) if sigma is None else sigma
    return float(np.sum(w.weights(sigma) * c.coeffs**2))


def weighted_norm(c, w, sigma=None):
    """Truncated weighted trace norm ``(Σ w(σ_j) g_j²)**0.5``.

    Parameters
    ----------
    c : TraceCoefficients
    w : WeightScheme
    sigma : array_like, optional
        Override for the basis eigenvalues.
    """
    return float(np.sqrt(weighted_sum(c, w, sigma)))


def extend(c, spectrum):
    """Extension ``E g = Σ sqrt(1 + σ_j) g_j u_j`` as a coefficient vector."""
    if c.basis_id != spectrum.basis_id:
        raise InvalidArgument("coefficients and spectrum use different bases")
    N = _check_N(spectrum, c.truncation)
    scale = np.sqrt(1.0 + spectrum.eigenvalues[:N]) * c.coeffs
    V = spectrum.eigenvectors[:, :N]
    out = V @ scale
    return np.asarray(out).ravel()


def trace_of(u, spectrum, m=None):
    """Boundary samples of ``γ_m u`` for a coefficient vector of the spectrum's space."""
    m = spectrum.basis_trace if m is None else m
    vals = spectrum.space.trace_matrix(m) @ np.asarray(u, float)
    return BoundarySamples(spectrum.param, np.asarray(vals).ravel())


# -- membership ------------------------------------------------------------------------

@dataclass
class MembershipVerdict:
    """Three-way summability verdict with its evidence.

    Attributes
    ----------
    verdict : {"in", "out", "undecided"}
    partial_sums : list of (N, S_N)
        Weighted partial sums at dyadic checkpoints.
    growth_exponent_fit : dict
        Fit of ``log ΔS`` against ``log N`` over the last checkpoints:
        ``exponent``, ``r_squared`` and ``n_points``.
    tail_estimate : float or None
        Extrapolated remaining tail when the increments decay geometrically
        in the dyadic index.
    reason : str
    """

    verdict: str
    partial_sums: list
    growth_exponent_fit: dict
    tail_estimate: float | None = None
    reason: str = ""

    def to_dict(self):
        return {"verdict": self.verdict, "partial_sums": [list(p) for p in self.partial_sums],
                "fit": self.growth_exponent_fit, "tail_estimate": self.tail_estimate,
                "reason": self.reason}

    def to_json(self):
        return dumps(self.to_dict())


def dyadic_checkpoints(N):
    pts = [2**i for i in range(int(np.log2(N)) + 1)]
    if pts[-1] != N:
        pts.append(N)
    return np.array(pts)


def _linfit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (a * x + b)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(a), float(b), float(min(max(r2, 0.0), 1.0))


def classify_terms(terms, cauchy_tol=CAUCHY_TOL, atol=0.0):
    """Classify summability of nonnegative ``terms`` from dyadic partial sums.

    The partial sums at the checkpoints of :func:`dyadic_checkpoints` are
    differenced into blocks; blocks starting below ``MIN_BLOCK_START`` are
    dropped as pre-asymptotic, and so is a final partial block shorter than
    half a dyadic step.  Each block increment is divided by its width
    in ``log N`` (so a final partial block is comparable) and attributed to
    the geometric mean of its ends, giving a rate ``ρ(N) = dS / d log N``.

    Rules, applied in order:

    * ``in`` if the last block's dyadic-equivalent increment ``ρ log 2`` is
      below ``max(cauchy_tol * S, atol)`` (Cauchy tail), or if the rates
      follow a power law ``ρ ~ N**a`` with ``a < -0.1`` and R² > 0.99 (the
      tail ``ρ(N_max) / |a|`` is then reported);
    * ``out`` if the rates grow with ``a > 0.1`` and R² > 0.99
      (``S_N ~ N**a``), or if they are flat (``a >= -0.02``, coefficient of
      variation <= 0.1) while ``S`` grows linearly in ``log N``;
    * ``undecided`` otherwise, including when fewer than four blocks are
      available.
    """
    terms = np.asarray(terms, float)
    if terms.size == 0:
        return MembershipVerdict("undecided", [], {}, reason="no terms")
    if np.any(terms < 0):
        raise InvalidArgument("terms must be nonnegative")
    cs = np.cumsum(terms)
    Ns = dyadic_checkpoints(terms.size)
    partial = [(int(n), float(cs[n - 1])) for n in Ns]
    S = cs[Ns - 1]
    lo, hi = Ns[:-1], Ns[1:]
    # a sliver of a final block (under half a dyadic step) carries too few terms
    keep = (lo >= MIN_BLOCK_START) & (hi * hi >= 2 * lo * lo)
    rho = np.diff(S)[keep] / np.log(hi[keep] / lo[keep])
    mid = np.sqrt(lo[keep] * hi[keep].astype(float))
    if rho.size < MIN_INCREMENTS:
        return MembershipVerdict("undecided", partial, {},
                                 reason=f"only {rho.size} dyadic blocks (need {MIN_INCREMENTS})")
    Stot = cs[-1]
    last = float(rho[-1] * np.log(2.0))
    if last <= max(cauchy_tol * abs(Stot), atol):
        return MembershipVerdict("in", partial, {}, tail_estimate=last,
                                 reason="Cauchy tail below tolerance")
    win = slice(max(0, rho.size - FIT_WINDOW), rho.size)
    rw, Nw, Sw = rho[win], mid[win], S[1:][keep][win]
    pos = rw > 0
    fit = {}
    if pos.sum() >= MIN_INCREMENTS:
        a, b, r2 = _linfit(np.log(Nw[pos]), np.log(rw[pos]))
        fit = {"exponent": a, "r_squared": r2, "n_points": int(pos.sum())}
        if a < -FIT_SLOPE and r2 > FIT_R2:
            tail = float(np.exp(b) * float(terms.size) ** a / -a)
            return MembershipVerdict("in", partial, fit, tail_estimate=tail,
                                     reason=f"increments decay like N^{a:.3f}")
        if a > FIT_SLOPE and r2 > FIT_R2:
            return MembershipVerdict("out", partial, fit,
                                     reason=f"partial sums grow like N^{a:.3f}")
        cv = float(np.std(rw) / np.mean(rw))
        if a >= -0.02 and cv <= 0.1 and pos.all():
            ends = Ns[1:][keep][win].astype(float)
            ls, _, lr2 = _linfit(np.log(ends), Sw)
            fit.update({"log_slope": ls, "log_r_squared": lr2, "increment_cv": cv})
            if ls > 0 and lr2 > FIT_R2:
                return MembershipVerdict("out", partial, fit,
                                         reason="partial sums grow like log N")
    return MembershipVerdict("undecided", partial, fit,
                             reason="no decay or growth pattern meets the evidence thresholds")


def classify_membership(coeff_generator, w, N_max, cauchy_tol=CAUCHY_TOL, atol=0.0):
    """Membership of ``Σ w(σ_j) g_j²`` from the first ``N_max`` terms.

    Parameters
    ----------
    coeff_generator : callable or array_like or TraceCoefficients
        ``j -> g_j`` for 1-based ``j`` (vectorized calls are tried first).
    w : WeightScheme
        Its eigenvalue source supplies ``σ_j`` unless ``coeff_generator`` is
        attached to a spectrum.
    """
    if isinstance(coeff_generator, TraceCoefficients):
        g = coeff_generator.coeffs[:N_max]
        sigma = (np.zeros(g.size) if w.kind == "L2"
                 else w.sigma(g.size) if w.eigenvalues is not None
                 else coeff_generator.eigenvalues[:g.size])
    else:
        g = (np.asarray(coeff_generator, float)[:N_max] if not callable(coeff_generator)
             else _vectorized(coeff_generator, int(N_max)))
        sigma = w.sigma(g.size)
    return classify_terms(w.weights(sigma) * g**2, cauchy_tol, atol)


# -- Hadamard example ------------------------------------------------------------------

HADAMARD_EXPONENT = -0.75


def disk_laplace_sigma(j, R=1.0):
    """Harmonic Steklov eigenvalues of the disk by 1-based index: ``σ_j = ⌊j/2⌋ / R``."""
    return (np.asarray(j) // 2) / R


def hadamard_rule(j, exponent=HADAMARD_EXPONENT):
    """``g_j = n**exponent`` on the cosine mode ``n`` (``j = 2n``), zero elsewhere."""
    j = np.asarray(j)
    n = j // 2
    out = np.zeros(j.shape, float)
    hit = (j % 2 == 0) & (n >= 1)
    out[hit] = n[hit].astype(float) ** exponent
    return out


def hadamard_coefficients(N, spectrum=None, exponent=HADAMARD_EXPONENT):
    """Hadamard-type boundary datum on the harmonic Steklov basis of the unit disk.

    Parameters
    ----------
    N : int
        Truncation in the basis index ``j``.
    spectrum : Spectrum, optional
        A unit-disk Laplace spectrum with at least ``N`` modes; built on
        demand otherwise.
    """
    if spectrum is None:
        from .disk_spectral import laplace_steklov_disk
        spectrum = laplace_steklov_disk(1.0, max(1, N // 2))
    _check_N(spectrum, N)
    return TraceCoefficients(spectrum.basis_id, hadamard_rule(np.arange(1, N + 1), exponent),
                             spectrum)
