import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from steklov_trace.disk_spectral import biharmonic_steklov_disk, laplace_steklov_disk
from steklov_trace.errors import InvalidArgument
from steklov_trace.fem import solve
from steklov_trace.geometry import BoundarySamples, DiskDomain, build_rect_mesh, node_angles
from steklov_trace.spectrum import SteklovProblemSpec
from steklov_trace.trace_spaces import (MembershipVerdict, TraceCoefficients, WeightScheme,
                                        boundary_expand, classify_membership, classify_terms,
                                        disk_laplace_sigma, dyadic_checkpoints, extend,
                                        hadamard_coefficients, hadamard_rule, reconstruct_field,
                                        steklov_expand, synthesize, trace_of, weighted_norm,
                                        weighted_sum)

DISK = DiskDomain(1.0)


@pytest.fixture(scope="module")
def lap():
    return laplace_steklov_disk(1.0, 8)


@pytest.fixture(scope="module")
def bih():
    return {ell: biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 10) for ell in (0, 1)}


@pytest.fixture(scope="module")
def square():
    mesh, _ = build_rect_mesh(1.0, 1.0, 4, 4, "c1rect")
    return solve(SteklovProblemSpec(2, 1, (), mesh), mesh, 20)


def _all_spectra(lap, bih, square):
    return {"lap": lap, "bih0": bih[0], "bih1": bih[1], "square": square}


class TestSteklovExpand:
    def test_eigenfunction_gives_unit_vector(self, lap, bih, square):
        for s in _all_spectra(lap, bih, square).values():
            c = steklov_expand(s.vector(2), s, 10)
            np.testing.assert_allclose(c.coeffs, np.eye(10)[2], atol=1e-10)

    def test_zero(self, lap):
        assert not np.any(steklov_expand(np.zeros(lap.space.ndof), lap).coeffs)

    def test_single_harmonic_mode(self, lap):
        u = lap.space.coefficients([(2, "c", 2, 1.0)])
        c = steklov_expand(u, lap)
        hit = np.flatnonzero(np.abs(c.coeffs) > 1e-12)
        assert hit.size == 1
        assert lap.eigenvalues[hit[0]] == 2
        # the eigenfunction there is r² cos 2θ up to normalization and sign
        assert np.allclose(lap.vector(hit[0]) * c.coeffs[hit[0]], u)

    @settings(max_examples=20, deadline=None)
    @given(arrays(float, 12, elements=st.floats(-5, 5)))
    def test_reconstruction(self, a):
        s = laplace_steklov_disk(1.0, 8)
        u = s.eigenvectors[:, :12] @ a
        u = np.asarray(u).ravel()
        back = reconstruct_field(steklov_expand(u, s, 12), s)
        d = back - u
        assert np.sqrt(max(s.inner(d, d), 0.0)) <= 1e-8 * (1 + np.linalg.norm(a))

    def test_wrong_length(self, lap):
        with pytest.raises(InvalidArgument):
            steklov_expand(np.zeros(3), lap)

    def test_truncation_bound(self, lap):
        with pytest.raises(InvalidArgument):
            steklov_expand(np.zeros(lap.space.ndof), lap, len(lap) + 1)


class TestBoundaryExpand:
    def test_hat_trace_gives_unit_vector(self, lap, bih, square):
        for s in _all_spectra(lap, bih, square).values():
            g = BoundarySamples(s.param, s.hat_traces[:, 0])
            np.testing.assert_allclose(boundary_expand(g, s, 8).coeffs, np.eye(8)[0], atol=1e-10)

    @pytest.mark.parametrize("R", [1.0, 2.5])
    def test_constant(self, R):
        s = laplace_steklov_disk(R, 6)
        g = BoundarySamples(s.param, np.full(s.param.n_nodes, 3.0))
        c = boundary_expand(g, s).coeffs
        # û_1 = 1/sqrt(2πR), so <3, û_1> = 3 sqrt(2πR)
        assert abs(c[0] - 3.0 * np.sqrt(2 * np.pi * R)) <= 1e-12
        assert np.max(np.abs(c[1:])) <= 1e-12

    def test_unresolved_mode_is_orthogonal(self):
        s = laplace_steklov_disk(1.0, 3)
        g = BoundarySamples(s.param, np.cos(5 * node_angles(s.param)))
        assert np.max(np.abs(boundary_expand(g, s).coeffs)) <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(arrays(float, 40, elements=st.floats(-3, 3)))
    def test_bessel_inequality(self, v):
        s = laplace_steklov_disk(1.0, 8)
        th = node_angles(s.param)
        vals = sum(c * np.cos((i + 1) * th + i) for i, c in enumerate(v[:20]))
        g = BoundarySamples(s.param, vals + v[20])
        c = boundary_expand(g, s)
        assert np.sum(c.coeffs**2) <= s.param.integrate(g.values**2) + 1e-8

    @settings(max_examples=25, deadline=None)
    @given(arrays(float, 10, elements=st.floats(-3, 3)))
    def test_parseval_in_span(self, a):
        s = laplace_steklov_disk(1.0, 8)
        g = synthesize(TraceCoefficients(s.basis_id, a, s), s)
        c = boundary_expand(g, s, 10)
        assert abs(np.sum(c.coeffs**2) - s.param.integrate(g.values**2)) <= 1e-8 * (1 + a @ a)

    def test_node_mismatch(self, lap):
        other = laplace_steklov_disk(1.0, 20)
        g = BoundarySamples(other.param, np.ones(other.param.n_nodes))
        with pytest.raises(InvalidArgument):
            boundary_expand(g, lap)


class TestWeightedNorm:
    @pytest.mark.parametrize("s", [0.0, 0.5, 1.3])
    def test_first_unit_vector(self, lap, s):
        c = TraceCoefficients.unit(lap, 1, 5)
        assert weighted_norm(c, WeightScheme.HsA(s)) == 1.0

    def test_geometric_sequence_is_in(self):
        j = np.arange(1, 257)
        v = classify_membership(2.0**-j, WeightScheme.HkA(disk_laplace_sigma), 256)
        assert v.verdict == "in"

    @settings(max_examples=30, deadline=None)
    @given(arrays(float, 15, elements=st.floats(-10, 10)), st.floats(0, 2), st.floats(0, 2))
    def test_weight_monotonicity(self, g, s1, s2):
        s1, s2 = min(s1, s2), max(s1, s2)
        lap = laplace_steklov_disk(1.0, 8)
        c = TraceCoefficients(lap.basis_id, g, lap)
        assert weighted_norm(c, WeightScheme.HsA(s1)) <= weighted_norm(c, WeightScheme.HsA(s2)) * (1 + 1e-14)

    @settings(max_examples=30, deadline=None)
    @given(arrays(float, 17, elements=st.floats(-10, 10)))
    def test_monotone_in_truncation(self, g):
        lap = laplace_steklov_disk(1.0, 8)
        w = WeightScheme.HkA()
        norms = [weighted_norm(TraceCoefficients(lap.basis_id, g[:n], lap), w)
                 for n in range(1, 18)]
        assert np.all(np.diff(norms) >= 0)

    def test_two_conventions_differ(self, lap):
        c = TraceCoefficients(lap.basis_id, np.ones(5), lap)
        # HkA uses (1+σ) once, HsA(1/2) uses (1+σ)^{2·1/2}: equal; HsA(1) squares it
        assert weighted_sum(c, WeightScheme.HkA()) == weighted_sum(c, WeightScheme.HsA(0.5))
        assert weighted_sum(c, WeightScheme.HsA(1.0)) > weighted_sum(c, WeightScheme.HkA())

    def test_negative_order_rejected(self):
        with pytest.raises(InvalidArgument):
            WeightScheme.HsA(-0.1)


class TestExtend:
    def test_single_term(self, bih):
        s = bih[1]
        u = extend(TraceCoefficients.unit(s, 1, 6), s)
        np.testing.assert_allclose(u, np.sqrt(1 + s.eigenvalues[0]) * s.vector(0), atol=1e-15)

    def test_zero(self, lap):
        assert not np.any(extend(TraceCoefficients(lap.basis_id, np.zeros(7), lap), lap))

    @settings(max_examples=20, deadline=None)
    @given(arrays(float, 10, elements=st.floats(-5, 5)), st.sampled_from(["lap", "bih0", "bih1", "square"]))
    def test_right_inverse(self, c, which):
        s = _SPECTRA[which]()
        coeffs = TraceCoefficients(s.basis_id, np.concatenate([c, np.zeros(6)]), s)
        back = boundary_expand(trace_of(extend(coeffs, s), s), s, 16)
        assert np.max(np.abs(back.coeffs - coeffs.coeffs)) <= 1e-8 * (1 + np.abs(c).max())

    def test_energy_equals_weighted_sum(self, bih):
        s = bih[0]
        rng = np.random.default_rng(3)
        c = TraceCoefficients(s.basis_id, rng.standard_normal(12), s)
        u = extend(c, s)
        assert abs(s.inner(u, u) - weighted_sum(c, WeightScheme.HkA())) <= 1e-10 * s.inner(u, u)

    def test_basis_mismatch(self, lap, bih):
        with pytest.raises(InvalidArgument):
            extend(TraceCoefficients(lap.basis_id, np.ones(3), lap), bih[0])


_CACHE = {}


def _cached(key, fn):
    if key not in _CACHE:
        _CACHE[key] = fn()
    return _CACHE[key]


def _square_spec():
    mesh, _ = build_rect_mesh(1.0, 1.0, 4, 4, "c1rect")
    return solve(SteklovProblemSpec(2, 1, (), mesh), mesh, 20)


_SPECTRA = {
    "lap": lambda: _cached("lap", lambda: laplace_steklov_disk(1.0, 8)),
    "bih0": lambda: _cached("bih0", lambda: biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), DISK), 10)),
    "bih1": lambda: _cached("bih1", lambda: biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), DISK), 10)),
    "square": lambda: _cached("square", _square_spec),
}


class TestClassify:
    def test_exponential_in(self):
        j = np.arange(1, 1025)
        v = classify_membership(np.exp(-j), WeightScheme.L2(), 1024)
        assert v.verdict == "in" and v.reason.startswith("Cauchy")

    def test_callable_generator(self):
        v = classify_membership(lambda j: np.exp(-j), WeightScheme.L2(), 512)
        assert v.verdict == "in"

    def test_hadamard_verdicts(self):
        c = hadamard_coefficients(10_000)
        h = classify_membership(c, WeightScheme.HkA(), 10_000)
        assert h.verdict == "out"
        assert abs(h.growth_exponent_fit["exponent"] - 0.5) <= 0.1
        assert classify_membership(c, WeightScheme.L2(), 10_000).verdict == "in"

    def test_hadamard_small_truncation(self):
        c = hadamard_coefficients(100)
        assert classify_membership(c, WeightScheme.L2(), 100).verdict == "in"
        assert classify_membership(c, WeightScheme.HsA(0.5), 100).verdict == "out"

    def test_hadamard_tail_estimate(self):
        v = classify_membership(hadamard_coefficients(10_000), WeightScheme.L2(), 10_000)
        # Σ_{n>5000} n^{-3/2} by the Euler–Maclaurin tail ≈ 2/sqrt(5000.5)
        assert abs(v.tail_estimate - 2 / np.sqrt(5000.5)) <= 0.05 * v.tail_estimate

    def test_hadamard_partial_sums(self):
        v = classify_membership(hadamard_coefficients(100), WeightScheme.L2(), 100)
        S = dict(v.partial_sums)
        n = np.arange(1, 51)
        assert abs(S[100] - np.sum(n**-1.5)) <= 1e-12
        assert abs(S[64] - np.sum(np.arange(1, 33) ** -1.5)) <= 1e-12

    def test_hadamard_weighted_growth(self):
        w = WeightScheme.HkA(disk_laplace_sigma)
        sums = [weighted_sum(TraceCoefficients("x", hadamard_rule(np.arange(1, N + 1))), w,
                             disk_laplace_sigma(np.arange(1, N + 1)))
                for N in (10**3, 10**4, 10**5)]
        # Σ_{n<=N/2} (1+n) n^{-3/2} ≈ 2 sqrt(N/2): ratio sqrt(10) per decade
        np.testing.assert_allclose(np.diff(np.log10(sums)), 0.5, atol=0.05)

    def test_extension_norm_growth(self):
        N_list = (256, 1024, 4096)
        s = laplace_steklov_disk(1.0, 2048)
        norms = []
        for N in N_list:
            u = extend(hadamard_coefficients(N, s), s)
            norms.append(np.sqrt(s.inner(u, u)))
        slope = np.polyfit(np.log(N_list), np.log(norms), 1)[0]
        assert abs(slope - 0.25) <= 0.05

    def test_few_terms_undecided(self):
        assert classify_terms(np.ones(10)).verdict == "undecided"

    def test_zero_sequence_in(self):
        assert classify_terms(np.zeros(256)).verdict == "in"

    def test_linear_growth_out(self):
        assert classify_terms(np.ones(4096)).verdict == "out"

    def test_harmonic_series_out(self):
        j = np.arange(1, 4097)
        assert classify_terms(1.0 / j).verdict == "out"

    def test_negative_terms(self):
        with pytest.raises(InvalidArgument):
            classify_terms([1.0, -1.0])

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-3, 3), st.integers(6, 13))
    def test_power_law_verdicts(self, p, logN):
        """Power terms j^p: never "in" when divergent, never "out" when convergent."""
        j = np.arange(1, 2**logN + 1, dtype=float)
        v = classify_terms(j**p).verdict
        if p >= -1:
            assert v != "in"
        if p <= -1.3:
            assert v != "out"

    def test_checkpoints(self):
        assert dyadic_checkpoints(100).tolist() == [1, 2, 4, 8, 16, 32, 64, 100]

    def test_verdict_json(self):
        v = classify_terms(np.ones(64))
        d = json.loads(v.to_json())
        assert d["verdict"] == v.verdict and d["partial_sums"][-1] == [64, 64]

    def test_evidence_rule(self):
        v = classify_terms(np.arange(1, 65) ** -2.0)
        assert isinstance(v, MembershipVerdict)
        if v.verdict == "in" and v.growth_exponent_fit:
            assert v.growth_exponent_fit["r_squared"] > 0.99


class TestCoefficients:
    def test_json_round_trip(self, lap):
        c = TraceCoefficients(lap.basis_id, [0.1, 1 / 3, -2e-17], lap)
        back = TraceCoefficients.from_json(c.to_json(), lap)
        assert back.basis_id == c.basis_id and back.coeffs.tobytes() == c.coeffs.tobytes()

    def test_json_basis_checked(self, lap, bih):
        c = TraceCoefficients(lap.basis_id, [1.0], lap)
        with pytest.raises(InvalidArgument):
            TraceCoefficients.from_json(c.to_json(), bih[0])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidArgument):
            TraceCoefficients("x", [1.0, np.nan])

    def test_arithmetic_requires_same_basis(self, lap, bih):
        a = TraceCoefficients(lap.basis_id, [1.0, 2.0], lap)
        b = TraceCoefficients(bih[0].basis_id, [1.0, 2.0], bih[0])
        with pytest.raises(InvalidArgument):
            a + b
        np.testing.assert_allclose((2 * a - a).coeffs, a.coeffs)
