import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from steklov_trace.disk_spectral import (biharmonic_steklov_disk, disk_auxiliary, kernel_form,
                                         laplace_steklov_disk, polynomial_kernel_check)
from steklov_trace.errors import InvalidArgument
from steklov_trace.geometry import DiskDomain
from steklov_trace.spectrum import SteklovProblemSpec

DISK = DiskDomain(1.0)


# -- independent per-mode oracle --------------------------------------------------------------

_x, _y, _r, _t = sp.symbols("x y r t", real=True)


def _mode_field(n, a):
    """``r**a cos nθ`` as a Cartesian polynomial (``a - n`` even, >= 0)."""
    return sp.expand(sp.re(sp.expand((_x + sp.I * _y) ** n)) * (_x**2 + _y**2) ** ((a - n) // 2))


def _exact_mode_eigenvalue(n, ell, beta=1):
    """Finite eigenvalue of the k=2 problem on span{r^n, r^{n+2}} cos nθ, unit disk.

    Hessian energies are integrated exactly in Cartesian form; boundary
    traces of ``r**a cos nθ`` on ``r = 1`` are ``cos nθ`` and ``a cos nθ``.
    """
    powers = (n, n + 2)
    fields = [_mode_field(n, a) for a in powers]
    polar = {_x: _r * sp.cos(_t), _y: _r * sp.sin(_t)}

    def hess(f):
        return [sp.diff(f, _x, 2), sp.diff(f, _x, _y), sp.diff(f, _y, 2)]

    def energy(f, g):
        hf, hg = hess(f), hess(g)
        dens = hf[0] * hg[0] + 2 * hf[1] * hg[1] + hf[2] * hg[2]
        dens = sp.expand(dens.subs(polar))
        return sp.integrate(sp.integrate(dens * _r, (_t, 0, 2 * sp.pi)), (_r, 0, 1))

    c = 2 * sp.pi if n == 0 else sp.pi  # ∫ cos² nθ
    tr = {0: [1, 1], 1: list(powers)}
    A = sp.zeros(2, 2)
    for i in range(2):
        for j in range(2):
            A[i, j] = energy(fields[i], fields[j]) + beta * c * tr[1 - ell][i] * tr[1 - ell][j]
    t = sp.Matrix(tr[ell])
    # B = c t tᵀ has rank one; the finite eigenvalue is 1 / (c tᵀ A⁻¹ t)
    if A.det() == 0:
        z = A.nullspace()[0]
        assert (t.T * z)[0] != 0
        return 0.0
    return float(1 / (c * (t.T * A.inv() * t)[0]))


@pytest.fixture(scope="module")
def mode_oracle():
    return {(n, ell): _exact_mode_eigenvalue(n, ell) for ell in (0, 1) for n in range(5)}


class TestLaplaceDisk:
    def test_unit_disk(self):
        s = laplace_steklov_disk(1.0, 3)
        np.testing.assert_allclose(s.eigenvalues, [0, 1, 1, 2, 2, 3, 3], atol=1e-14)

    def test_radius_two(self):
        s = laplace_steklov_disk(2.0, 2)
        np.testing.assert_allclose(s.eigenvalues, [0, 0.5, 0.5, 1, 1], atol=1e-14)

    def test_first_eigenvalue_simple_and_constant(self):
        s = laplace_steklov_disk(1.0, 6)
        assert s.eigenvalues[0] == 0 and s.eigenvalues[1] > 0
        u0 = s.boundary_traces[0][:, 0]
        assert np.ptp(u0) <= 1e-14

    def test_residual_oracle(self):
        """Eigenfunctions are harmonic and satisfy ∂_r u = σ u on the circle."""
        s = laplace_steklov_disk(1.0, 4)
        th = np.linspace(0, 2 * np.pi, 13)
        h = 1e-4
        for j in range(1, 9):
            u = s.vector(j)
            ev = lambda r, t: s.space.evaluate(u, np.asarray(r, float), np.asarray(t, float))
            dr = (ev(1 + h, th) - ev(1 - h, th)) / (2 * h)
            np.testing.assert_allclose(dr, s.eigenvalues[j] * ev(1.0, th), atol=1e-6)
            # five-point Laplacian at an interior point, in polar form
            r0, t0 = 0.6, 0.7
            lap = ((ev(r0 + h, t0) - 2 * ev(r0, t0) + ev(r0 - h, t0)) / h**2
                   + (ev(r0 + h, t0) - ev(r0 - h, t0)) / (2 * h * r0)
                   + (ev(r0, t0 + h) - 2 * ev(r0, t0) + ev(r0, t0 - h)) / (h * r0) ** 2)
            assert abs(lap) < 1e-4

    def test_invariants(self):
        s = laplace_steklov_disk(1.5, 20)
        rep = s.check_invariants(tol=1e-10)
        assert rep["max_relative_residual"] <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 10.0))
    def test_scaling(self, R):
        s1 = laplace_steklov_disk(1.0, 6)
        sR = laplace_steklov_disk(R, 6)
        np.testing.assert_allclose(sR.eigenvalues * R, s1.eigenvalues, rtol=1e-14, atol=1e-14)

    def test_sign_convention(self):
        s = laplace_steklov_disk(1.0, 8)
        for j in range(len(s)):
            tr = s.boundary_traces[0][:, j]
            first = tr[np.flatnonzero(np.abs(tr) > 1e-10)[0]]
            assert first > 0

    @pytest.mark.parametrize("R, n", [(0.0, 3), (1.0, 0)])
    def test_bad_input(self, R, n):
        with pytest.raises(InvalidArgument):
            laplace_steklov_disk(R, n)


class TestBiharmonicDisk:
    @pytest.mark.parametrize("ell", [0, 1])
    def test_per_mode_oracle(self, ell, mode_oracle):
        s = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 8)
        want = sorted([mode_oracle[(0, ell)]] + [mode_oracle[(n, ell)] for n in range(1, 5)
                                                for _ in range(2)])
        np.testing.assert_allclose(s.eigenvalues[:9], want, rtol=1e-10, atol=1e-12)

    def test_known_mode_values(self, mode_oracle):
        np.testing.assert_allclose([mode_oracle[(n, 0)] for n in range(5)],
                                   [0, 0.75, 28 / 3, 34.875, 86.4], rtol=1e-12)

    def test_ell0_kernel_is_constants(self):
        s = biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), DISK), 10)
        assert s.eigenvalues[0] <= 1e-8 * s.eigenvalues[1] and s.eigenvalues[1] > 0.1
        assert np.ptp(s.boundary_traces[0][:, 0]) <= 1e-12
        assert np.max(np.abs(s.boundary_traces[1][:, 0])) <= 1e-12

    def test_ell1_positive(self):
        s = biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), DISK), 10)
        assert s.eigenvalues[0] > 0.5

    @pytest.mark.parametrize("ell", [0, 1])
    def test_weak_residual_and_gram(self, ell):
        s = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 15)
        rep = s.check_invariants(tol=1e-8)
        assert rep["max_relative_residual"] <= 1e-8

    @pytest.mark.parametrize("ell", [0, 1])
    def test_rayleigh_quotient(self, ell):
        s = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 10)
        for j in range(1, len(s)):
            u = s.vector(j)
            q = (u @ (s.lhs @ u)) / (u @ (s.rhs @ u))
            assert abs(q - s.eigenvalues[j]) <= 1e-8 * s.eigenvalues[j]

    @pytest.mark.parametrize("ell", [0, 1])
    def test_mode_completeness(self, ell):
        a = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 8)
        b = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 13)
        np.testing.assert_allclose(b.eigenvalues[:len(a)], a.eigenvalues, rtol=1e-12)

    @pytest.mark.parametrize("ell", [0, 1])
    def test_cutoff_is_certified(self, ell):
        """Nothing from the modes left out would fall below the kept eigenvalues."""
        a = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 6)
        b = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), DISK), 20)
        assert b.eigenvalues[len(a)] >= a.eigenvalues.max()

    @settings(max_examples=12, deadline=None)
    @given(st.floats(0.1, 5.0), st.floats(1.0, 4.0), st.sampled_from([0, 1]))
    def test_beta_monotonicity(self, b, factor, ell):
        other = 1 - ell
        lo = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, {other: b}, DISK), 6)
        hi = biharmonic_steklov_disk(SteklovProblemSpec(2, ell, {other: b * factor}, DISK), 6)
        n = min(len(lo), len(hi))
        assert np.all(hi.eigenvalues[:n] >= lo.eigenvalues[:n] * (1 - 1e-12) - 1e-14)

    def test_threads_do_not_change_result(self):
        spec = SteklovProblemSpec(2, 1, (), DISK)
        a = biharmonic_steklov_disk(spec, 12, workers=1)
        b = biharmonic_steklov_disk(spec, 12, workers=4)
        assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()

    def test_requires_k2(self):
        with pytest.raises(InvalidArgument):
            biharmonic_steklov_disk(SteklovProblemSpec(1, 0, (), DISK), 4)

    def test_spec_validation(self):
        with pytest.raises(InvalidArgument):
            SteklovProblemSpec(2, 2)
        with pytest.raises(InvalidArgument):
            SteklovProblemSpec(2, 0, {1: 0.0})
        with pytest.raises(InvalidArgument):
            SteklovProblemSpec(2, 0, {0: 1.0})


class TestAuxiliaryDisk:
    def test_dirichlet_type_values(self):
        a = disk_auxiliary(1.0, 0, 1, 5)
        np.testing.assert_allclose(a.eigenvalues[:5], [1, 3, 3, 5, 5], atol=1e-10)

    def test_neumann_type_ordered(self):
        a = disk_auxiliary(1.0, 1, 0, 8)
        assert np.all(a.eigenvalues >= 0) and np.all(np.diff(a.eigenvalues) >= 0)

    @pytest.mark.parametrize("ell, m", [(0, 1), (1, 0)])
    def test_hat_gram(self, ell, m):
        a = disk_auxiliary(1.0, ell, m, 10)
        H = a.hat_traces
        G = (H * a.param.weights[:, None]).T @ H
        assert np.max(np.abs(G - np.eye(len(a)))) <= 1e-8

    @pytest.mark.parametrize("ell, m", [(0, 1), (1, 0)])
    def test_constraint_holds(self, ell, m):
        a = disk_auxiliary(1.0, ell, m, 6)
        assert np.max(np.abs(a.boundary_traces[ell])) <= 1e-12

    def test_invalid_pair(self):
        with pytest.raises(InvalidArgument):
            disk_auxiliary(1.0, 0, 0, 4)


class TestKernelChecker:
    def test_constants_for_ell0(self):
        rep = polynomial_kernel_check(2, 0, 1.0)
        assert rep.kernel and all(abs(res) <= 1e-10 for _, res in rep.kernel)
        assert any(name == "1" for name, _ in rep.kernel)

    def test_empty_for_ell1(self):
        assert polynomial_kernel_check(2, 1, 1.0).kernel == []

    def test_laplace_constants(self):
        rep = polynomial_kernel_check(1, 0, 2.0)
        assert [name for name, _ in rep.kernel] == ["1"]

    def test_third_order_example_residual(self):
        """For u = 2 - |x|² on |x| < 2: u = -2 and ∂²u/∂r² = -2 on the circle,
        the third derivatives vanish, so the form is 4·|∂Ω| + 4·|∂Ω| = 32π."""
        example = {(0, 0): 2.0, (2, 0): -1.0, (0, 2): -1.0}
        rep = polynomial_kernel_check(3, 1, 2.0, example=example)
        assert abs(rep.example[1] - 32 * math.pi) <= 1e-10
        assert all(name != rep.example[0] for name, _ in rep.kernel)

    def test_form_matches_hand_value(self):
        # u = x on the unit disk, k=2, ell=0: zero Hessian, ∂u/∂r = cos θ, ∮ cos² = π
        assert abs(kernel_form({(1, 0): 1.0}, 2, 0, 1.0) - math.pi) <= 1e-12

    def test_order_bounds(self):
        with pytest.raises(InvalidArgument):
            polynomial_kernel_check(5, 0, 1.0)
