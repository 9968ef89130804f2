"""Fractional seminorms of boundary functions by direct quadrature.

These estimates are independent of any Steklov basis and serve as the
reference against which the spectral trace norms are compared.  Both
estimators run on a sequence of nested node sets (every ``2**i``-th node of
the input samples), coarse to fine, and either extrapolate the sequence or
flag it as divergent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .errors import InvalidArgument
from .geometry import BoundarySamples

DIVERGENCE_R2 = 0.95
DECAY_RATIO = 0.75
CHUNK = 512


@dataclass
class SeminormEstimate:
    """Estimates of a seminorm on refining node sets.

    Attributes
    ----------
    value_at_levels : list of (int, float)
        ``(number of nodes, estimate)``, coarse to fine.
    extrapolated : float or "divergent"
    diagnostics : dict
        Increment ratios and the growth fit against ``log n``.
    """

    value_at_levels: list
    extrapolated: object
    diagnostics: dict = field(default_factory=dict)

    @property
    def divergent(self):
        return isinstance(self.extrapolated, str)

    @property
    def finest(self):
        return self.value_at_levels[-1][1]

    def to_csv(self):
        lines = ["level,n_nodes,estimate"]
        lines += [f"{i},{n},{v:.17g}" for i, (n, v) in enumerate(self.value_at_levels)]
        return "\n".join(lines) + "\n"


def _levels(n, n_levels, min_nodes):
    out = []
    f = 1
    while n // f >= min_nodes and len(out) < n_levels:
        out.append(f)
        f *= 2
    if len(out) < 2:
        raise InvalidArgument(f"{n} samples are too few for a refinement sequence")
    return out[::-1]


def _fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - a * x - b) ** 2) / ss if ss > 0 else 1.0
    return float(a), float(min(max(r2, 0.0), 1.0))


def _summarize(levels, values, order=1.0):
    """Divergence test and Richardson extrapolation assuming O(h**order) error."""
    n = np.array([lv for lv, _ in zip(levels, values)], float)
    v = np.asarray(values, float)
    d = np.diff(v)
    diag = {}
    if v.size >= 3:
        ratios = d[1:] / np.where(d[:-1] == 0, np.nan, d[:-1])
        diag["increment_ratios"] = ratios.tolist()
        slope, r2 = _fit(np.log(n[-4:]), v[-4:])
        diag.update({"log_slope": slope, "log_r_squared": r2})
        last = ratios[-1]
        if (np.isfinite(last) and last >= DECAY_RATIO and d[-1] > 0
                and slope > 0 and r2 > DIVERGENCE_R2):
            return "divergent", diag
    if v[-1] == 0 and np.all(v == 0):
        return 0.0, diag
    r = 2.0 ** order
    return float((r * v[-1] - v[-2]) / (r - 1)), diag


def _pair_sum(x, g, w, s, p):
    """``Σ_{i≠j} w_i w_j |g_i - g_j|**p / |x_i - x_j|**(s p + 1)`` in row chunks."""
    n = len(g)
    total = 0.0
    expo = s * p + 1.0
    for a in range(0, n, CHUNK):
        b = min(n, a + CHUNK)
        dx = x[a:b, None, :] - x[None, :, :]
        dist = np.sqrt(np.sum(dx * dx, axis=-1))
        dg = np.abs(g[a:b, None] - g[None, :])
        rows = np.arange(a, b)
        dist[rows - a, rows] = 1.0
        term = dg**p / dist**expo
        term[rows - a, rows] = 0.0
        total += float(np.sum(w[a:b, None] * term * w[None, :]))
    return total


def gagliardo_seminorm(g, s, p, n_levels=5, min_nodes=32):
    """Gagliardo double integral ``∬ |g(x)-g(y)|^p / |x-y|^{sp+1}`` on a boundary curve.

    Uses chordal distances and the Voronoi quadrature weights of each
    decimated node set; diagonal pairs are excluded.  For smooth data the
    omitted diagonal contributes O(h), which the extrapolation removes.

    Parameters
    ----------
    g : BoundarySamples
    s : float
        Order in (0, 1).
    p : float
        Exponent >= 1.
    """
    if not 0 < s < 1:
        raise InvalidArgument("s must lie in (0, 1)")
    if p < 1:
        raise InvalidArgument("p must be >= 1")
    if not isinstance(g, BoundarySamples):
        raise InvalidArgument("gagliardo_seminorm expects BoundarySamples")
    factors = _levels(g.param.n_nodes, n_levels, min_nodes)
    values, sizes = [], []
    for f in factors:
        prm = g.param.decimate(f)
        vals = np.asarray(g.values)[::f]
        values.append(_pair_sum(prm.points, vals, prm.weights, s, p))
        sizes.append(prm.n_nodes)
    extrap, diag = _summarize(sizes, values)
    return SeminormEstimate(list(zip(sizes, values)), extrap, diag)


def _periodic_spacing(g):
    if isinstance(g, BoundarySamples):
        s = g.param.node_arclengths
        L = g.param.total_length
        vals = np.asarray(g.values, float)
    else:
        vals, L = np.asarray(g[0], float), float(g[1])
        s = L * np.arange(vals.size) / vals.size
    gaps = np.diff(np.concatenate([s, [s[0] + L]]))
    if np.max(np.abs(gaps - L / vals.size)) > 1e-9 * L:
        raise InvalidArgument("difference seminorms need uniformly spaced periodic samples")
    return vals, L


def _difference_integral(vals, L, s, p, order):
    n = vals.size
    dx = L / n
    total = 0.0
    coef = [(-1) ** (order - j) * comb(order, j, exact=True) for j in range(order + 1)]
    for k in range(1, n // 2 + 1):
        diff = sum(c * np.roll(vals, -j * k) for j, c in enumerate(coef))
        norm_p = dx * np.sum(np.abs(diff) ** p)
        # h and -h contribute equally except at the antipodal shift
        sym = 1.0 if 2 * k == n else 2.0
        total += sym * dx * norm_p / (k * dx) ** (s * p + 1)
    return total


def besov_diff_seminorm(g, s, p, sigma_order, n_levels=5, min_nodes=32):
    """Difference form ``∫ ‖Δ_h^σ g‖_p^p / |h|^{sp+1} dh`` on a periodic parameterization.

    Parameters
    ----------
    g : BoundarySamples or (values, length)
        Uniformly spaced samples along the arclength of a closed curve.
    sigma_order : {1, 2}
        Order of the finite difference; must exceed ``s``.
    """
    if sigma_order not in (1, 2):
        raise InvalidArgument("sigma_order must be 1 or 2")
    if sigma_order <= s:
        raise InvalidArgument("sigma_order must exceed s")
    if not 0 < s < sigma_order or p < 1:
        raise InvalidArgument("need s > 0 and p >= 1")
    vals, L = _periodic_spacing(g)
    factors = _levels(vals.size, n_levels, min_nodes)
    values, sizes = [], []
    for f in factors:
        v = vals[::f]
        if vals.size % f:
            raise InvalidArgument("sample count must be divisible by the decimation factors")
        values.append(_difference_integral(v, L, s, p, sigma_order))
        sizes.append(v.size)
    extrap, diag = _summarize(sizes, values)
    return SeminormEstimate(list(zip(sizes, values)), extrap, diag)
