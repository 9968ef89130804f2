"""Weyl-law fits of computed spectra and the sequence-space view of trace norms."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gamma

from .errors import InvalidArgument
from .serialize import dumps
from .trace_spaces import TraceCoefficients, classify_terms

DEFAULT_J_MIN = 10
MIN_FIT_POINTS = 20


@dataclass(frozen=True)
class WeylFit:
    """Power law ``σ_j ≈ constant * (j / |∂Ω|)**exponent`` fitted on a range of ``j``.

    Attributes
    ----------
    exponent : float
    constant : float
        Weyl constant in the perimeter-normalized law.
    prefactor : float
        ``constant / |∂Ω|**exponent``, i.e. the fit ``σ_j ≈ prefactor * j**exponent``.
    fit_range : (int, int)
        Inclusive 1-based index range used.
    r_squared : float
    """

    exponent: float
    constant: float
    prefactor: float
    fit_range: tuple
    r_squared: float

    def to_json(self):
        return dumps(asdict(self))


def weyl_fit(spectrum, j_min=DEFAULT_J_MIN, j_max=None, perimeter=None):
    """Least-squares fit of ``log σ_j`` against ``log j`` over ``j_min <= j <= j_max``.

    Parameters
    ----------
    spectrum : Spectrum or array_like
        Eigenvalues in nondecreasing order (1-based indexing).
    perimeter : float, optional
        ``|∂Ω|``; taken from the spectrum's boundary when omitted, 1 for bare
        arrays.
    """
    if hasattr(spectrum, "eigenvalues"):
        sigma = np.asarray(spectrum.eigenvalues, float)
        perimeter = spectrum.param.total_length if perimeter is None else perimeter
    else:
        sigma = np.asarray(spectrum, float)
        perimeter = 1.0 if perimeter is None else perimeter
    j_max = sigma.size if j_max is None else min(int(j_max), sigma.size)
    j = np.arange(1, sigma.size + 1)
    sel = (j >= j_min) & (j <= j_max) & (sigma > 0)
    if sel.sum() < MIN_FIT_POINTS:
        raise InvalidArgument(f"need at least {MIN_FIT_POINTS} positive eigenvalues in the fit range, "
                              f"got {int(sel.sum())}")
    x, y = np.log(j[sel]), np.log(sigma[sel])
    A = np.column_stack([x, np.ones_like(x)])
    (e, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss = np.sum((y - y.mean()) ** 2)
    # a flat sequence is fitted exactly; guard against round-off in ss
    r2 = 1.0 - np.sum((y - e * x - b) ** 2) / ss if ss > 1e-20 * y.size else 1.0
    pref = float(np.exp(b))
    return WeylFit(float(e), float(pref * perimeter**e), pref, (int(j_min), int(j_max)),
                   float(min(max(r2, 0.0), 1.0)))


def unit_ball_volume(d):
    """Volume ``ω_d`` of the unit ball in ``R^d``."""
    return np.pi ** (d / 2) / gamma(d / 2 + 1)


def weyl_constant_laplace(N=2):
    """Constant ``2π / ω_{N-1}**(1/(N-1))`` of the harmonic Steklov Weyl law in ``R^N``."""
    if N < 2:
        raise InvalidArgument("dimension must be at least 2")
    return float(2 * np.pi / unit_ball_volume(N - 1) ** (1.0 / (N - 1)))


def sequence_view(c, exponent, atol=0.0):
    """Classify ``(j**exponent * s_j) ∈ ℓ²`` for a coefficient sequence.

    Parameters
    ----------
    c : TraceCoefficients or array_like
        Coefficients ordered by basis index (``j`` starts at 1).
    exponent : float
        E.g. ``1/2`` for the half-order space in the plane.
    """
    s = c.coeffs if isinstance(c, TraceCoefficients) else np.asarray(c, float)
    j = np.arange(1, s.size + 1, dtype=float)
    return classify_terms((j**exponent * s) ** 2, atol=atol)
