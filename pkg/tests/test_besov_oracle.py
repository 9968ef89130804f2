import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from steklov_trace.besov_oracle import besov_diff_seminorm, gagliardo_seminorm
from steklov_trace.errors import InvalidArgument
from steklov_trace.geometry import BoundarySamples, build_disk, node_angles, polygon_param


@pytest.fixture(scope="module")
def circle():
    _, p = build_disk(1.0, 512)
    return p


def _samples(p, f):
    return BoundarySamples(p, f(node_angles(p)))


def _diff_oracle(omega, L, order):
    """``∫_{-L/2}^{L/2} ‖Δ_h^σ sin(ω·)‖² / h² dh`` with ``‖·‖² = (L/2) |e^{iωh} - 1|^{2σ}``."""
    f = lambda h: (L / 2) * (2 * np.sin(omega * h / 2)) ** (2 * order) / h**2
    val, _ = integrate.quad(f, 0, L / 2, limit=200)
    return 2 * val


class TestGagliardo:
    def test_constant_is_zero_at_every_level(self, circle):
        est = gagliardo_seminorm(BoundarySamples(circle, np.full(circle.n_nodes, 2.5)), 0.5, 2.0)
        assert all(v == 0 for _, v in est.value_at_levels) and est.extrapolated == 0

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_trig_oracle(self, circle, n):
        # chord |x-y| = 2|sin(t/2)|: ∬ |cos nθ - cos nφ|² / |x-y|² = 2π² n
        est = gagliardo_seminorm(_samples(circle, lambda t: np.cos(n * t)), 0.5, 2.0)
        assert abs(est.extrapolated - 2 * np.pi**2 * n) <= 1e-6 * 2 * np.pi**2 * n

    def test_levels_strictly_refine(self, circle):
        est = gagliardo_seminorm(_samples(circle, np.sin), 0.5, 2.0)
        sizes = [n for n, _ in est.value_at_levels]
        assert all(b > a for a, b in zip(sizes, sizes[1:]))

    def test_step_diverges_logarithmically(self, circle):
        est = gagliardo_seminorm(_samples(circle, lambda t: (t < np.pi).astype(float)), 0.5, 2.0)
        assert est.divergent
        assert est.diagnostics["log_slope"] > 0 and est.diagnostics["log_r_squared"] > 0.95
        d = np.diff([v for _, v in est.value_at_levels])
        # two jumps; each adds ∫ dt/t over the two orderings, 2 ln 2 per doubling
        np.testing.assert_allclose(d[-2:], 4 * np.log(2), rtol=0.01)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3), st.sampled_from([1.0, 2.0, 3.0]))
    def test_scaling(self, c, p):
        _, prm = build_disk(1.0, 128)
        g = _samples(prm, lambda t: np.cos(t) + 0.3 * np.sin(3 * t))
        a = gagliardo_seminorm(g, 0.4, p)
        b = gagliardo_seminorm(BoundarySamples(prm, c * g.values), 0.4, p)
        for (_, va), (_, vb) in zip(a.value_at_levels, b.value_at_levels):
            assert abs(vb - abs(c) ** p * va) <= 1e-12 * vb

    def test_reversal_symmetry(self):
        _, p = build_disk(1.5, 256)
        x, y = p.points.T
        g = BoundarySamples(p, np.exp(x) * np.sin(3 * y) + (y > 0.3))
        rp = p.reversed()
        order = [int(np.argmin(np.linalg.norm(rp.points - q, axis=1))) for q in p.points]
        vals = np.empty(p.n_nodes)
        vals[order] = g.values
        a, b = gagliardo_seminorm(g, 0.5, 2.0), gagliardo_seminorm(BoundarySamples(rp, vals), 0.5, 2.0)
        for (na, va), (nb, vb) in zip(a.value_at_levels, b.value_at_levels):
            assert na == nb and abs(va - vb) <= 1e-12 * va

    @pytest.mark.parametrize("s, p", [(0.0, 2.0), (1.0, 2.0), (0.5, 0.5)])
    def test_invalid(self, circle, s, p):
        with pytest.raises(InvalidArgument):
            gagliardo_seminorm(_samples(circle, np.cos), s, p)

    def test_too_few_nodes(self):
        _, p = build_disk(1.0, 32)
        with pytest.raises(InvalidArgument):
            gagliardo_seminorm(_samples(p, np.cos), 0.5, 2.0)

    def test_csv(self, circle):
        csv = gagliardo_seminorm(_samples(circle, np.cos), 0.5, 2.0).to_csv().splitlines()
        assert csv[0] == "level,n_nodes,estimate" and csv[-1].startswith("4,512,")


class TestDifferenceForm:
    def test_constant_is_zero(self):
        est = besov_diff_seminorm((np.ones(256), 3.0), 0.5, 2.0, 1)
        assert est.extrapolated == 0

    @pytest.mark.parametrize("order", [1, 2])
    def test_sine_oracle(self, order):
        L = 2 * np.pi
        t = L * np.arange(1024) / 1024
        est = besov_diff_seminorm((np.sin(2 * np.pi * t / L), L), 0.5, 2.0, order)
        want = _diff_oracle(2 * np.pi / L, L, order)
        assert abs(est.extrapolated - want) <= 1e-3 * want

    def test_order_ratio_matches_oracle(self):
        """The two difference orders give equivalent, not equal, seminorms."""
        L = 3.0
        t = L * np.arange(1024) / 1024
        g = (np.sin(2 * np.pi * t / L), L)
        i1 = besov_diff_seminorm(g, 0.5, 2.0, 1).extrapolated
        i2 = besov_diff_seminorm(g, 0.5, 2.0, 2).extrapolated
        w = 2 * np.pi / L
        want = _diff_oracle(w, L, 2) / _diff_oracle(w, L, 1)
        assert abs(i2 / i1 - want) <= 1e-3 * want
        assert 1.6 < want < 1.7

    @pytest.mark.parametrize("order", [1, 2])
    def test_step_divergent(self, circle, order):
        est = besov_diff_seminorm(_samples(circle, lambda t: (t < np.pi).astype(float)), 0.5, 2.0, order)
        assert est.divergent and est.diagnostics["log_slope"] > 0

    @pytest.mark.parametrize("n", range(1, 6))
    def test_cross_oracle_finiteness(self, circle, n):
        for f in (np.cos, np.sin):
            g = _samples(circle, lambda t: f(n * t))
            a = gagliardo_seminorm(g, 0.5, 2.0)
            b = besov_diff_seminorm(g, 0.5, 2.0, 1)
            assert a.divergent == b.divergent == False  # noqa: E712

    def test_cross_oracle_step(self, circle):
        g = _samples(circle, lambda t: np.where(np.abs(t - 2) < 1, 1.0, 0.0))
        assert gagliardo_seminorm(g, 0.5, 2.0).divergent
        assert besov_diff_seminorm(g, 0.5, 2.0, 1).divergent

    def test_order_must_exceed_s(self):
        with pytest.raises(InvalidArgument):
            besov_diff_seminorm((np.ones(64), 1.0), 1.0, 2.0, 1)
        with pytest.raises(InvalidArgument):
            besov_diff_seminorm((np.ones(64), 1.0), 0.5, 2.0, 3)

    def test_nonuniform_rejected(self):
        p = polygon_param([[0, 0], [2, 0], [2, 1], [0, 1]], 16)
        with pytest.raises(InvalidArgument):
            besov_diff_seminorm(BoundarySamples(p, np.ones(p.n_nodes)), 0.5, 2.0, 1)
