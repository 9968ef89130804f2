"""Compatibility of Dirichlet and Neumann data for H² fields (k = 2).

Three independent tests are provided:

* :func:`check_pair`, the spectral test: extend one trace with the Steklov
  basis, compare the other trace of the extension with the given datum, and
  test the residual's membership in the range of the matching auxiliary
  problem;
* :func:`vertex_compat_p2`, the corner log-integral condition on polygons;
* :func:`geymonat_check`, the half-order smoothness of the rotated gradient
  field built from the pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .besov_oracle import gagliardo_seminorm
from .errors import InvalidArgument
from .geometry import BoundaryParam, BoundarySamples
from .serialize import dumps
from .trace_spaces import (MembershipVerdict, TraceCoefficients, WeightScheme, boundary_expand,
                           classify_terms, extend, synthesize)

log = logging.getLogger(__name__)

ROUTES = {"2": (0, 1), "23": (1, 0)}
DECAY_RATIO_VERTEX = 0.75
NOISE_VERTEX = 1e-12


@dataclass
class TracePair:
    """Pair ``(g0, g1)`` of a Dirichlet and a Neumann boundary datum.

    Each entry is either :class:`BoundarySamples` or
    :class:`TraceCoefficients` (``g0`` in the ``ell = 0`` basis, ``g1`` in the
    ``ell = 1`` basis).
    """

    g0: object
    g1: object

    @classmethod
    def zero(cls, param):
        z = BoundarySamples(param, np.zeros(param.n_nodes))
        return cls(z, z)

    @classmethod
    def of_field(cls, u, spectrum):
        """Total trace ``(γ_0 u, γ_1 u)`` of a coefficient vector of ``spectrum``'s space."""
        T0, T1 = spectrum.space.trace_matrix(0), spectrum.space.trace_matrix(1)
        p = spectrum.param
        return cls(BoundarySamples(p, np.asarray(T0 @ u).ravel()),
                   BoundarySamples(p, np.asarray(T1 @ u).ravel()))

    def __add__(self, other):
        return TracePair(_add(self.g0, other.g0), _add(self.g1, other.g1))


def _add(a, b):
    return a + b


@dataclass
class CompatibilityReport:
    """Outcome of one route of the spectral compatibility test.

    Attributes
    ----------
    route : {"2", "23"}
        ``"2"`` extends ``g0`` and tests the Neumann residual; ``"23"``
        extends ``g1`` and tests the Dirichlet residual.
    residual : BoundarySamples
    residual_coeffs : TraceCoefficients
        Residual in the normalized auxiliary traces ``ŵ_j``.
    verdict : MembershipVerdict
        Membership under the weights ``1 + η_j``.
    residual_norm_partial_sums : list of (int, float)
    """

    route: str
    residual: BoundarySamples
    residual_coeffs: TraceCoefficients
    verdict: MembershipVerdict
    residual_norm_partial_sums: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"route": self.route, "verdict": self.verdict.verdict,
                "residual_norm_partial_sums": [list(x) for x in self.residual_norm_partial_sums],
                "fit": self.verdict.growth_exponent_fit, "reason": self.verdict.reason,
                "diagnostics": self.diagnostics}


@dataclass
class PairCheck:
    """Both routes of :func:`check_pair`."""

    reports: dict

    @property
    def verdicts(self):
        return {r: rep.verdict.verdict for r, rep in self.reports.items()}

    @property
    def consistent(self):
        """No route says ``in`` while another says ``out``."""
        v = set(self.verdicts.values())
        return not {"in", "out"} <= v

    @property
    def verdict(self):
        v = set(self.verdicts.values())
        if "in" in v and "out" not in v:
            return "in"
        if "out" in v and "in" not in v:
            return "out"
        return "undecided"

    def to_json(self):
        return dumps({"verdict": self.verdict, "consistent": self.consistent,
                      "routes": {r: rep.to_dict() for r, rep in self.reports.items()}})


def _as_samples(g, spectrum):
    if isinstance(g, BoundarySamples):
        return g
    if isinstance(g, TraceCoefficients):
        if g.basis_id != spectrum.basis_id:
            raise InvalidArgument(f"datum is expanded in {g.basis_id!r}, expected {spectrum.basis_id!r}")
        return synthesize(g, spectrum)
    raise InvalidArgument("trace data must be BoundarySamples or TraceCoefficients")


def _as_coeffs(g, spectrum, N):
    if isinstance(g, TraceCoefficients):
        if g.basis_id != spectrum.basis_id:
            raise InvalidArgument(f"datum is expanded in {g.basis_id!r}, expected {spectrum.basis_id!r}")
        c = np.zeros(N)
        c[:min(N, g.truncation)] = g.coeffs[:N]
        return TraceCoefficients(g.basis_id, c, spectrum)
    return boundary_expand(g, spectrum, N)


def residual(pair, spectra, route, N):
    """Residual boundary function of one route.

    Route ``"2"``: ``γ_1(E_0 g0) - g1``.  Route ``"23"``: ``γ_0(E_1 g1) - g0``.
    """
    ell, m = ROUTES[route]
    given = pair.g0 if ell == 0 else pair.g1
    other = pair.g1 if ell == 0 else pair.g0
    S = spectra[ell]
    c = _as_coeffs(given, S, N)
    u = extend(c, S)
    tr = np.asarray(S.space.trace_matrix(m) @ u).ravel()
    target = _as_samples(other, spectra[m])
    if target.param.n_nodes != S.param.n_nodes:
        raise InvalidArgument("trace data and spectra use different boundary nodes")
    return BoundarySamples(S.param, tr - target.values)


def check_pair(pair, spectra, aux, N=None, tol=1e-8, routes=("2", "23")):
    """Spectral compatibility test of a Dirichlet/Neumann pair.

    Parameters
    ----------
    pair : TracePair
    spectra : dict
        ``{0: Spectrum, 1: Spectrum}`` for ``k = 2`` with ``ell = 0, 1``.
    aux : dict
        ``{(0, 1): Spectrum, (1, 0): Spectrum}`` auxiliary spectra.
    N : int, optional
        Truncation used for every expansion (default: the largest common size).
    tol : float
        Relative noise level; weighted residual terms below
        ``(tol * scale)**2`` count as zero, where ``scale`` is the size of the
        data.

    Returns
    -------
    PairCheck
    """
    if set(spectra) != {0, 1}:
        raise InvalidArgument("check_pair needs the ell = 0 and ell = 1 spectra")
    sizes = [len(spectra[0]), len(spectra[1])] + [len(aux[k]) for k in aux]
    N = min(sizes) if N is None else int(N)
    if N > min(sizes):
        raise InvalidArgument(f"truncation {N} exceeds available modes {min(sizes)}")
    p = spectra[0].param
    reports = {}
    for route in routes:
        ell, m = ROUTES[route]
        A = aux.get((ell, m))
        if A is None:
            raise InvalidArgument(f"route {route} needs the auxiliary spectrum {(ell, m)}")
        r = residual(pair, spectra, route, N)
        rc = boundary_expand(r, A, N)
        terms = (1.0 + A.eigenvalues[:N]) * rc.coeffs**2
        g0 = _as_samples(pair.g0, spectra[0]).values
        g1 = _as_samples(pair.g1, spectra[1]).values
        scale = np.sqrt(p.integrate(g0**2) + p.integrate(g1**2))
        atol = (tol * max(scale, 1.0)) ** 2
        verdict = classify_terms(terms, atol=atol)
        partial = [(n, float(np.sqrt(s))) for n, s in verdict.partial_sums]
        lost = p.integrate(r.values**2) - np.sum(rc.coeffs**2)
        reports[route] = CompatibilityReport(
            route, r, rc, verdict, partial,
            {"N": N, "residual_l2": float(np.sqrt(max(p.integrate(r.values**2), 0.0))),
             "unresolved_l2": float(np.sqrt(max(lost, 0.0))), "noise_floor": atol})
        if lost > max(atol, 1e-8 * p.integrate(r.values**2)) and verdict.verdict == "in":
            log.info("route %s: residual not resolved by %d auxiliary modes", route, N)
    return PairCheck(reports)


# -- polygon corner conditions ------------------------------------------------------------

@dataclass
class VertexReport:
    """Log-integral estimate at one polygon corner.

    ``levels`` lists ``(σ_min, I(σ_min))`` with
    ``I(σ_min) = ∫_{σ_min}^{δ} |g_B(V + σ t_B) - g_A(V - σ t_A)|² / σ dσ``.
    """

    vertex: int
    position: float
    levels: list
    verdict: str
    fit: dict


def _side_interp(param, g, side):
    sel = np.flatnonzero(param.node_side == side)
    s = param.node_arclengths[sel]
    a, b = param.side_ranges[side]
    return s - a, np.asarray(g)[sel], b - a


def _gauss_log_bands(delta, n_bands, n_gauss=8):
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    bands = []
    for i in range(n_bands):
        hi, lo = np.log(delta) - i * np.log(2.0), np.log(delta) - (i + 1) * np.log(2.0)
        t = lo + 0.5 * (x + 1) * (hi - lo)
        bands.append((np.exp(t), 0.5 * (hi - lo) * w))
    return bands


def vertex_compat_p2(g, param, delta=None, max_levels=30):
    """Corner condition ``∫_0^δ |g_{j+1}(x_j(σ)) - g_j(x_j(-σ))|² dσ/σ < ∞`` per vertex.

    Parameters
    ----------
    g : BoundarySamples or sequence of array_like
        Data on a polygon parameterization; a sequence gives one array per
        side (sampled at that side's nodes).
    param : BoundaryParam
        Polygon parameterization with ``vertex_positions``.
    delta : float, optional
        Window length; defaults to a quarter of the shortest side.

    Returns
    -------
    list of VertexReport
        The integral is evaluated in ``log σ`` with Gauss rules on dyadic
        bands, down to the node spacing.  ``divergent`` needs a slope of the
        estimate against ``log(1/σ_min)`` above 0.1 with R² > 0.95 on the
        finest levels; ``finite`` needs decaying band contributions.
    """
    if not isinstance(param, BoundaryParam) or len(param.vertex_positions) == 0:
        raise InvalidArgument("vertex_compat_p2 needs a polygon parameterization")
    nsides = len(param.side_ranges)
    if isinstance(g, BoundarySamples):
        values = np.asarray(g.values, float)
    else:
        values = np.empty(param.n_nodes)
        for j, arr in enumerate(g):
            values[param.node_side == j] = arr
    side_len = min(b - a for a, b in param.side_ranges)
    delta = 0.25 * side_len if delta is None else float(delta)
    spacing = np.max(np.diff(param.node_arclengths))
    n_bands = int(np.floor(np.log2(delta / spacing)))
    n_bands = max(0, min(n_bands, max_levels))
    # differences at round-off level of the data count as zero
    floor = (NOISE_VERTEX * max(float(np.max(np.abs(values))), 1.0)) ** 2
    reports = []
    for j in range(nsides):
        before = (j - 1) % nsides
        sa, va, La = _side_interp(param, values, before)
        sb, vb, _ = _side_interp(param, values, j)
        if n_bands < 4:
            reports.append(VertexReport(j, float(param.vertex_positions[j]), [], "undecided",
                                        {"reason": f"only {n_bands} dyadic levels resolvable"}))
            continue
        contrib, levels, total = [], [], 0.0
        for i, (sig, w) in enumerate(_gauss_log_bands(delta, n_bands)):
            gb = np.interp(sig, sb, vb)
            ga = np.interp(La - sig, sa, va)
            band = float(np.sum(w * (gb - ga) ** 2))
            contrib.append(band)
            total += band
            levels.append((delta / 2 ** (i + 1), total))
        reports.append(_vertex_verdict(j, float(param.vertex_positions[j]), levels, contrib, floor))
    return reports


def _vertex_verdict(j, pos, levels, contrib, floor=0.0):
    lv = np.array(levels)
    x = np.log(1.0 / lv[:, 0])
    y = lv[:, 1]
    k = min(6, len(y))
    A = np.column_stack([x[-k:], np.ones(k)])
    (a, b), *_ = np.linalg.lstsq(A, y[-k:], rcond=None)
    ss = np.sum((y[-k:] - y[-k:].mean()) ** 2)
    r2 = 1 - np.sum((y[-k:] - a * x[-k:] - b) ** 2) / ss if ss > 0 else 1.0
    c = np.asarray(contrib)
    scale = max(y[-1], 1e-300)
    ratios = c[1:] / np.where(c[:-1] > 0, c[:-1], np.nan)
    fit = {"slope": float(a), "r_squared": float(r2),
           "last_ratio": float(ratios[-1]) if ratios.size else None}
    if a > 0.1 and r2 > 0.95:
        verdict = "divergent"
    elif y[-1] <= floor or c[-1] <= 1e-14 * scale or np.all(ratios[-3:] < DECAY_RATIO_VERTEX):
        verdict = "finite"
    else:
        verdict = "undecided"
    return VertexReport(j, pos, [tuple(map(float, t)) for t in levels], verdict, fit)


def vertex_reports_csv(reports):
    lines = ["vertex,sigma_min,estimate"]
    for r in reports:
        lines += [f"{r.vertex},{s:.17g},{v:.17g}" for s, v in r.levels]
    return "\n".join(lines) + "\n"


# -- rotated gradient condition -------------------------------------------------------------

@dataclass
class GeymonatReport:
    """Half-order seminorms of the components of ``v = (∂_t g0) t + g1 ν``.

    ``verdict`` is ``bounded`` when both components converge, ``divergent``
    when either diverges, and ``undecided`` otherwise.
    """

    field: np.ndarray
    components: list
    verdict: str

    @property
    def compatible(self):
        return self.verdict == "bounded"

    def to_dict(self):
        return {"verdict": self.verdict,
                "components": [{"levels": [list(x) for x in c.value_at_levels],
                                "extrapolated": c.extrapolated} for c in self.components]}


def tangential_derivative(g, param):
    """Finite-difference ``∂_t g`` along each side (one-sided next to corners)."""
    values = np.asarray(g.values if isinstance(g, BoundarySamples) else g, float)
    out = np.empty_like(values)
    for side in range(max(1, len(param.side_ranges))):
        sel = np.flatnonzero(param.node_side == side)
        if sel.size == 0:
            continue
        s = param.node_arclengths[sel]
        if param.kind == "disk" or len(param.vertex_positions) == 0:
            # closed smooth curve: periodic central differences
            L = param.total_length
            sp = np.concatenate([[s[-1] - L], s, [s[0] + L]])
            vp = np.concatenate([[values[sel][-1]], values[sel], [values[sel][0]]])
            out[sel] = np.gradient(vp, sp)[1:-1]
        elif sel.size == 1:
            out[sel] = 0.0
        else:
            out[sel] = np.gradient(values[sel], s)
    return out


def geymonat_check(pair, param, n_levels=5, min_nodes=32):
    """Test ``(∂_t g0) t + g1 ν ∈ B^{1/2}_2`` componentwise under refinement.

    ``pair`` must hold :class:`BoundarySamples`.  Corners carry no nodes
    (nodes sit strictly inside sides), so the field is defined at every node.
    """
    if not (isinstance(pair.g0, BoundarySamples) and isinstance(pair.g1, BoundarySamples)):
        raise InvalidArgument("geymonat_check needs sampled boundary data")
    dt = tangential_derivative(pair.g0, param)
    v = dt[:, None] * param.tangents + np.asarray(pair.g1.values)[:, None] * param.normals
    comps = []
    try:
        for i in range(2):
            comps.append(gagliardo_seminorm(BoundarySamples(param, v[:, i]), 0.5, 2.0,
                                            n_levels=n_levels, min_nodes=min_nodes))
    except InvalidArgument as exc:
        log.info("geymonat_check: %s", exc)
        return GeymonatReport(v, comps, "undecided")
    if any(c.divergent for c in comps):
        verdict = "divergent"
    elif len(comps[0].value_at_levels) >= 3:
        verdict = "bounded"
    else:
        verdict = "undecided"
    return GeymonatReport(v, comps, verdict)
