"""End-to-end acceptance checks, shared by the test suite and ``steklov-trace reproduce``.

Each ``criterion_*`` function runs one check and returns a
:class:`CriterionResult`; none of them raise on failure.
"""

from __future__ import annotations

import time
import traceback
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import weyl_constant_laplace, weyl_fit
from .besov_oracle import gagliardo_seminorm
from .compatibility import TracePair, check_pair
from .disk_spectral import biharmonic_steklov_disk, disk_auxiliary, laplace_steklov_disk
from .fem import solve, solve_auxiliary
from .geometry import BoundarySamples, DiskDomain, build_disk, build_polygon_disk_mesh, build_rect_mesh, node_angles
from .spectrum import SteklovProblemSpec
from .trace_spaces import (TraceCoefficients, WeightScheme, boundary_expand, classify_membership,
                           classify_terms, disk_laplace_sigma, extend, hadamard_coefficients, trace_of)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.title} ({self.seconds:.2f} s)"


def _run(number, title, fn):
    t0 = time.perf_counter()
    try:
        passed, details = fn()
    except Exception as exc:  # collected, not fail-fast
        passed, details = False, {"error": repr(exc), "traceback": traceback.format_exc()}
    return CriterionResult(number, title, bool(passed), details, time.perf_counter() - t0)


def _hat_gram_dev(spec, n):
    H = spec.hat_traces[:, :n]
    G = (H * spec.param.weights[:, None]).T @ H
    return float(np.max(np.abs(G - np.eye(n))))


# -- 1 ----------------------------------------------------------------------------------------

def criterion_1(n_modes=50, refinement=4):
    def run():
        t0 = time.perf_counter()
        details = {}
        ok = True
        for R in (1.0, 2.0):
            s = laplace_steklov_disk(R, n_modes)
            want = np.concatenate([[0.0], np.repeat(np.arange(1, n_modes + 1) / R, 2)])
            err = float(np.max(np.abs(s.eigenvalues - want)))
            details[f"analytic_max_error_R{R:g}"] = err
            ok &= err <= 1e-12
        mesh, _ = build_polygon_disk_mesh(1.0, refinement)
        f = solve(SteklovProblemSpec(1, 0, (), mesh), mesh, 7)
        ref = np.array([0, 1, 1, 2, 2, 3, 3], float)
        rel = np.abs(f.eigenvalues[1:] - ref[1:]) / ref[1:]
        details["fem_eigenvalues"] = f.eigenvalues.tolist()
        details["fem_max_relative_error"] = float(rel.max())
        details["fem_sigma1"] = float(f.eigenvalues[0])
        ok &= rel.max() <= 0.02 and abs(f.eigenvalues[0]) <= 1e-8
        details["runtime_s"] = time.perf_counter() - t0
        ok &= details["runtime_s"] < 10
        return ok, details
    return _run(1, "disk Laplace Steklov spectrum (analytic and FEM)", run)


# -- 2 ----------------------------------------------------------------------------------------

def _kernel_facts(spec):
    sig = spec.eigenvalues
    u0 = spec.boundary_traces[0][:, 0]
    const_dev = float(np.ptp(u0) / max(np.abs(u0).max(), 1e-300))
    return {"sigma1": float(sig[0]), "sigma2": float(sig[1]),
            "constant_trace_spread": const_dev}


def criterion_2(n_modes=10, n_cells=8):
    def run():
        disk = DiskDomain(1.0)
        mesh, _ = build_rect_mesh(1.0, 1.0, n_cells, n_cells, "c1rect")
        details, ok = {}, True
        for name, dom in (("disk", disk), ("square", mesh)):
            s0 = (biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), dom), n_modes)
                  if name == "disk" else solve(SteklovProblemSpec(2, 0, (), dom), dom, 10))
            s1 = (biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), dom), n_modes)
                  if name == "disk" else solve(SteklovProblemSpec(2, 1, (), dom), dom, 10))
            k0 = _kernel_facts(s0)
            # the whole eigenfunction must be constant: its gradient trace vanishes
            grad = float(np.max(np.abs(s0.boundary_traces[1][:, 0])))
            k0["normal_derivative_max"] = grad
            details[f"{name}_ell0"] = k0
            details[f"{name}_ell1_sigma1"] = float(s1.eigenvalues[0])
            ok &= (k0["sigma1"] <= 1e-8 * k0["sigma2"] and k0["sigma2"] > 1e-6
                   and k0["constant_trace_spread"] <= 1e-8 and grad <= 1e-8)
            ok &= s1.eigenvalues[0] > 1e-6
        return ok, details
    return _run(2, "k=2 kernel facts (ell=0 constants, ell=1 positive)", run)


# -- 3 ----------------------------------------------------------------------------------------

def criterion_3(n=20):
    def run():
        disk = DiskDomain(1.0)
        mesh1, _ = build_rect_mesh(1.0, 1.0, 8, 8, "p1")
        mesh2, _ = build_rect_mesh(1.0, 1.0, 6, 6, "c1rect")
        spectra = {
            "disk_k1": laplace_steklov_disk(1.0, n),
            "disk_k2_ell0": biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), disk), n),
            "disk_k2_ell1": biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), disk), n),
            "disk_aux_01": disk_auxiliary(1.0, 0, 1, n),
            "disk_aux_10": disk_auxiliary(1.0, 1, 0, n),
            "square_k1": solve(SteklovProblemSpec(1, 0, (), mesh1), mesh1, n),
            "square_k2_ell0": solve(SteklovProblemSpec(2, 0, (), mesh2), mesh2, n),
            "square_k2_ell1": solve(SteklovProblemSpec(2, 1, (), mesh2), mesh2, n),
            "square_aux_01": solve_auxiliary(mesh2, 0, 1, n),
            "square_aux_10": solve_auxiliary(mesh2, 1, 0, n),
        }
        devs = {k: _hat_gram_dev(s, n) for k, s in spectra.items()}
        return max(devs.values()) <= 1e-8, devs
    return _run(3, "normalized traces are L2-orthonormal (first 20 modes)", run)


# -- 4 ----------------------------------------------------------------------------------------

def criterion_4(n_trials=100, support=10, seed=0):
    def run():
        rng = np.random.default_rng(seed)
        disk = DiskDomain(1.0)
        mesh1, _ = build_rect_mesh(1.0, 1.0, 6, 6, "p1")
        mesh2, _ = build_rect_mesh(1.0, 1.0, 4, 4, "c1rect")
        cases = {
            "disk_k1": laplace_steklov_disk(1.0, 12),
            "disk_k2_ell0": biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), disk), 12),
            "disk_k2_ell1": biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), disk), 12),
            "square_k1": solve(SteklovProblemSpec(1, 0, (), mesh1), mesh1, 20),
            "square_k2_ell0": solve(SteklovProblemSpec(2, 0, (), mesh2), mesh2, 20),
            "square_k2_ell1": solve(SteklovProblemSpec(2, 1, (), mesh2), mesh2, 20),
        }
        errs = {}
        for name, s in cases.items():
            worst = 0.0
            for _ in range(n_trials):
                c = np.zeros(20)
                c[:support] = rng.standard_normal(support)
                coeffs = TraceCoefficients(s.basis_id, c, s)
                back = boundary_expand(trace_of(extend(coeffs, s), s), s, 20)
                worst = max(worst, float(np.max(np.abs(back.coeffs - c))))
            errs[name] = worst
        return max(errs.values()) <= 1e-8, errs
    return _run(4, "extension round trip on random coefficients", run)


# -- 5 ----------------------------------------------------------------------------------------

def criterion_5(j_min=10, j_max=200, n_modes=100):
    def run():
        disk = DiskDomain(1.0)
        f1 = weyl_fit(laplace_steklov_disk(1.0, n_modes), j_min, j_max)
        f20 = weyl_fit(biharmonic_steklov_disk(SteklovProblemSpec(2, 0, (), disk), n_modes), j_min, j_max)
        f21 = weyl_fit(biharmonic_steklov_disk(SteklovProblemSpec(2, 1, (), disk), n_modes), j_min, j_max)
        C = weyl_constant_laplace(2)
        # the law σ_j ≈ C (j/|∂Ω|) gives the prefactor C/|∂Ω| = 1/2 on the unit disk
        want_pref = C / (2 * np.pi)
        details = {"k1": f1.__dict__, "k2_ell0": f20.__dict__, "k2_ell1": f21.__dict__,
                   "closed_form_constant": C, "closed_form_prefactor": want_pref}
        ok = (abs(f1.exponent - 1) <= 0.05 and abs(f20.exponent - 3) <= 0.3
              and abs(f21.exponent - 1) <= 0.1
              and abs(f1.prefactor - want_pref) <= 0.1 * want_pref
              and abs(f1.constant - C) <= 0.1 * C)
        return ok, details
    return _run(5, "Weyl exponents and harmonic Weyl constant on the disk", run)


# -- 6 ----------------------------------------------------------------------------------------

def criterion_6(N=10**4):
    def run():
        c = hadamard_coefficients(N)
        l2 = classify_membership(c, WeightScheme.L2(), N)
        h12 = classify_membership(c, WeightScheme.HsA(0.5), N)
        a = h12.growth_exponent_fit.get("exponent", np.nan)
        details = {"L2": l2.to_dict(), "H12A": h12.to_dict()}
        return l2.verdict == "in" and h12.verdict == "out" and abs(a - 0.5) <= 0.1, details
    return _run(6, "Hadamard coefficients: in L2, not in H^1/2_A", run)


# -- 7 ----------------------------------------------------------------------------------------

def half_norm_ratios(n_max=20, n_samples=512):
    """Ratios ``‖g‖_{HsA(1/2)} / ‖g‖_{W^{1/2,2}}`` for ``cos nθ, sin nθ`` on the unit circle."""
    s = laplace_steklov_disk(1.0, n_max, n_boundary_samples=n_samples)
    th = node_angles(s.param)
    w = WeightScheme.HsA(0.5)
    out = {}
    for n in range(1, n_max + 1):
        for name, f in (("cos", np.cos), ("sin", np.sin)):
            g = BoundarySamples(s.param, f(n * th))
            hs = np.sqrt(np.sum(w.weights(s.eigenvalues) * boundary_expand(g, s).coeffs ** 2))
            gag = gagliardo_seminorm(g, 0.5, 2.0)
            full = np.sqrt(s.param.integrate(g.values**2) + gag.extrapolated)
            out[f"{name}{n}"] = float(hs / full)
    return out


def criterion_7(n_max=20):
    def run():
        ratios = half_norm_ratios(n_max)
        r = np.array(list(ratios.values()))
        band = float(r.max() / r.min())
        # step function: Gagliardo refinement sequence and HsA(1/2) partial sums
        _, p = build_disk(1.0, 1024)
        th = node_angles(p)
        step = BoundarySamples(p, (th < np.pi).astype(float))
        gag = gagliardo_seminorm(step, 0.5, 2.0)
        n = np.arange(1, 4097)
        # exact Fourier data of the step: sin coefficient 2/(nπ) for odd n, in the
        # L2-normalized basis sqrt(π) * that
        coef = np.zeros(2 * n.size + 1)
        coef[2 * n] = np.where(n % 2 == 1, 2 / (n * np.pi) * np.sqrt(np.pi), 0.0)
        hs = classify_terms((1 + disk_laplace_sigma(np.arange(1, coef.size + 1))) * coef**2)
        details = {"band": band, "min_ratio": float(r.min()), "max_ratio": float(r.max()),
                   "step_gagliardo": gag.extrapolated, "step_HsA": hs.verdict}
        return band <= 20 and gag.divergent and hs.verdict == "out", details
    return _run(7, "HsA(1/2) vs Gagliardo norm equivalence; step function divergent", run)


# -- 8 ----------------------------------------------------------------------------------------

ROUGH_EXPONENTS = (0.55, 0.6, 0.65, 0.7, 0.75)


def compatibility_setup(n_modes=128):
    disk = DiskDomain(1.0)
    spectra = {ell: biharmonic_steklov_disk(SteklovProblemSpec(2, ell, (), disk), n_modes)
               for ell in (0, 1)}
    aux = {(0, 1): disk_auxiliary(1.0, 0, 1, n_modes), (1, 0): disk_auxiliary(1.0, 1, 0, n_modes)}
    return spectra, aux


def rough_pair(param, exponent, n_modes):
    th = node_angles(param)
    g1 = sum(n**-exponent * np.cos(n * th) for n in range(1, n_modes + 1))
    return TracePair(BoundarySamples(param, np.zeros_like(th)), BoundarySamples(param, g1))


def criterion_8(n_modes=128):
    def run():
        spectra, aux = compatibility_setup(n_modes)
        p = spectra[0].param
        good = {"zero": check_pair(TracePair.zero(p), spectra, aux)}
        for ell in (0, 1):
            for j in range(10):
                u = spectra[ell].vector(j)
                good[f"ell{ell}_u{j + 1}"] = check_pair(TracePair.of_field(u, spectra[ell]), spectra, aux)
        bad = {f"rough_{e}": check_pair(rough_pair(p, e, n_modes), spectra, aux)
               for e in ROUGH_EXPONENTS}
        ok_good = all(all(v == "in" for v in r.verdicts.values()) for r in good.values())
        ok_bad = all("in" not in r.verdicts.values() and r.verdicts["2"] == "out"
                     for r in bad.values())
        consistent = all(r.consistent for r in list(good.values()) + list(bad.values()))
        details = {k: r.verdicts for k, r in {**good, **bad}.items()}
        return ok_good and ok_bad and consistent, details
    return _run(8, "compatibility: genuine pairs pass, rough pairs fail", run)


# -- 9 ----------------------------------------------------------------------------------------

def criterion_9(n_max=10):
    def run():
        a = disk_auxiliary(1.0, 0, 1, n_max)
        want = np.concatenate([[1.0], np.repeat(2 * np.arange(1, n_max + 1) + 1.0, 2)])
        err = float(np.max(np.abs(a.eigenvalues - want)))
        return err <= 1e-6, {"max_error": err, "eta": a.eigenvalues.tolist()}
    return _run(9, "auxiliary disk spectrum eta_n = 2n+1", run)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9)

NOTE_10 = ("criterion 10: set equalities of trace spaces are not checkable at finite "
           "truncation; criteria 3, 4, 7 and 8 test their finite surrogates")


def reproduce_all():
    """Run every criterion; returns the list of results (never raises)."""
    return [c() for c in CRITERIA]
