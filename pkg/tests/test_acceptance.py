"""Acceptance criteria 1-13; the terminal summary prints one PASS/FAIL line per criterion."""
import json
import math
import subprocess
import sys
import time
import warnings
from fractions import Fraction

import numpy as np

from confsym import conformal_lab as cl
from confsym import flat_model as fm
from confsym import minrep_branching as mb
from confsym import model_spectra as ms
from confsym.sphere_geometry import BandlimitedFunction, conformal_vector_fields
from confsym.zeta_heat import heat_coefficients_fit, integrated_heat_invariant, spectral_zeta, yamabe_coupling


def _rng(k):
    return np.random.default_rng(1000 + k)


def test_criterion_01_heat_coefficients_s2(record_property):
    t0 = time.perf_counter()
    rep = heat_coefficients_fit(ms.spectrum_table("laplace", {"n": 2}))
    elapsed = time.perf_counter() - t0
    e1, e0 = abs(rep.coefficient(-1) - 1), abs(rep.coefficient(0) - 1 / 3)
    record_property("detail", f"|a_-1 - 1| = {e1:.1e}, |a_0 - 1/3| = {e0:.1e}, {elapsed:.1f} s")
    assert e1 <= 1e-6 and e0 <= 1e-6 and elapsed < 10


def test_criterion_02_conformal_index_s4(record_property):
    z = spectral_zeta(ms.spectrum_table("yamabe", {"n": 4}), 0.0)
    index = float(z.exact) + z.kernel_dimension_subtracted
    integral = integrated_heat_invariant(2, 4, float(yamabe_coupling(4)))
    target = -1 / 90
    record_property("detail", f"zeta(0) = {z.exact}, int U_2 = {integral:.15g}, gap {abs(index - integral):.1e}")
    assert abs(index - target) <= 1e-8 and abs(integral - target) <= 1e-8 and abs(index - integral) <= 1e-9


def test_criterion_03_odd_dimension_vanishing(record_property):
    vals = {n: heat_coefficients_fit(ms.spectrum_table("yamabe", {"n": n})).coefficient(0) for n in (3, 5)}
    record_property("detail", ", ".join(f"S^{n}: a_0 = {v:.1e}" for n, v in vals.items()))
    assert all(abs(v) <= 1e-6 for v in vals.values())


def test_criterion_04_exact_spectral_identities(record_property):
    t0 = time.perf_counter()
    bad = []
    for n in range(3, 11):
        h = Fraction(n, 2)
        for k in range(51):
            y = ms.yamabe_eigenvalue(n, k)
            if (k + h) * (k + h - 1) != y or ms.gjms_eigenvalue(n, 1, k) != y:
                bad.append((n, k))
    for k in range(51):
        if ms.gjms_eigenvalue(4, 2, k) != k * (k + 1) * (k + 2) * (k + 3):
            bad.append((4, "paneitz", k))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(bad)} mismatches, {elapsed:.3f} s")
    assert not bad and elapsed < 1


def test_criterion_05_knapp_stein_hls(record_property):
    worst = math.inf
    for p in (Fraction(6, 5), Fraction(3, 2), Fraction(9, 5)):
        gam = [ms.knapp_stein_gamma(2, p, k) for k in range(40)]
        assert gam[0] == 1
        assert all(a > b for a, b in zip(gam, gam[1:]))
        rng = _rng(5)
        for _ in range(100):
            F = BandlimitedFunction.random(2, 4, rng, scale=rng.uniform(0.05, 1.5))
            worst = min(worst, cl.sharp_inequality_deficit("hls_spectral", F, p=float(p)).value)
        one = cl.sharp_inequality_deficit("hls_spectral", BandlimitedFunction.constant(2, 4, 1.0), p=float(p))
        assert abs(one.value) <= 1e-10
    record_property("detail", f"gamma_0 = 1, decreasing; min deficit {worst:.2e}")
    assert worst >= -1e-8


def test_criterion_06_onofri(record_property):
    t0 = time.perf_counter()
    rng = _rng(6)
    worst = min(cl.sharp_inequality_deficit(
        "onofri_endpoint", BandlimitedFunction.random(2, 3, rng, scale=rng.uniform(0.05, 2.0))).value
        for _ in range(100))
    mob = 0.0
    for _ in range(20):
        m = cl.MobiusLogFactor.along(2, rng.standard_normal(3), rng.uniform(-1.0, 1.0))
        mob = max(mob, abs(cl.sharp_inequality_deficit("onofri_endpoint", m.to_bandlimited(24) * 2.0).value))
    runs = [cl.extremal_search("onofri_endpoint", 2, 2, seed=s, scale=0.3, max_iter=500) for s in range(5)]
    elapsed = time.perf_counter() - t0
    record_property("detail", f"min deficit {worst:.1e}, Mobius max {mob:.1e}, optimizer final "
                              f"{max(r.value for r in runs):.1e} in <= {max(r.iterations for r in runs)} it, "
                              f"{elapsed:.1f} s")
    assert worst >= -1e-8 and mob <= 1e-6 and elapsed < 60
    assert all(r.value <= 1e-5 and r.iterations <= 500 for r in runs)


def test_criterion_07_beckner(record_property):
    rng = _rng(7)
    vals = [cl.beckner_functionals_S4(BandlimitedFunction.random(4, 2, rng, scale=rng.uniform(0.05, 1.5)))
            for _ in range(100)]
    s1, s2 = min(v.S1 for v in vals), min(v.S2 for v in vals)
    record_property("detail", f"min S1 {s1:.2e}, min S2 {s2:.2e}")
    assert s1 >= -1e-8 and s2 >= -1e-8


def test_criterion_08_covariance_curvature(record_property):
    rng = _rng(8)
    cov = {}
    for n in (2, 4):
        cov[n] = max(cl.yamabe_covariance_residual(n, BandlimitedFunction.random(n, 3, rng, scale=0.3),
                                                   BandlimitedFunction.random(n, 3, rng)) for _ in range(3))
    gb = max(abs(cl.gauss_bonnet(BandlimitedFunction.random(2, 3, rng, scale=0.4)) - 4 * math.pi)
             for _ in range(5))
    fields = conformal_vector_fields(2)
    poh = 0.0
    for _ in range(20):
        om = BandlimitedFunction.random(2, 3, rng, scale=rng.uniform(0.1, 0.6))
        poh = max(poh, max(cl.pohozaev_residual(2, om, X) for X in fields))
    record_property("detail", f"covariance n=2 {cov[2]:.1e}, n=4 {cov[4]:.1e}; Gauss-Bonnet {gb:.1e}; "
                              f"Pohozaev {poh:.1e} over {len(fields)} fields")
    assert max(cov.values()) <= 1e-6 and gb <= 1e-7 and poh <= 1e-7


def test_criterion_09_variation_law(record_property):
    rng = _rng(9)
    gaps = [cl.variation_check_U1(BandlimitedFunction.random(4, 2, rng, scale=0.3)).gap for _ in range(10)]
    record_property("detail", f"max gap {max(gaps):.1e}")
    assert max(gaps) <= 1e-5


def test_criterion_10_branching(record_property):
    t0 = time.perf_counter()
    sigs = list(mb.admissible_signatures(10))
    failed = [s for s in sigs if not mb.branching_verify_compact(*s, 12).equal]
    elapsed = time.perf_counter() - t0
    gaps = [(a, b, c) for a in range(1, 9) for b in range(1, 9) for c in range(13)
            if mb.branching_dimension_gap(a, b, c) != 0]
    two = all(mb.branching_verify_compact(p, q, q1, 1, 12).contributing_l() == [0, 1]
              for p, q, q1, q2 in sigs if q2 == 1)
    record_property("detail", f"{len(sigs) - len(failed)}/{len(sigs)} equal in {elapsed:.2f} s; "
                              f"{len(gaps)} dimension gaps; q''=1 gives l in {{0, 1}}: {two}")
    assert not failed and elapsed < 30 and not gaps and two


def test_criterion_11_discrete_spectrum(record_property):
    def lams(*args):
        out = mb.discrete_spectrum_params(*args)
        plus = [lam for lam, o in out if o == ("+", "-")]
        minus = [lam for lam, o in out if o == ("-", "+")]
        assert plus == minus
        return plus
    a = lams(2, 2, 2, 2, 5)
    b = lams(3, 2, 2, 3, 5)
    c = lams(3, 2, 2, 2, 10)
    record_property("detail", " | ".join(",".join(str(x) for x in v) or "empty" for v in (a, b, c)))
    assert a == [2, 3, 4, 5]
    assert b == [Fraction(3, 2), Fraction(5, 2), Fraction(7, 2), Fraction(9, 2)]
    assert c == []


def test_criterion_12_flat_model(record_property):
    rng = _rng(12)
    orders, stab, warned = [], [], 0
    for p, q in [(3, 3), (4, 2), (4, 4), (5, 3)]:
        n = p + q - 2
        d = rng.standard_normal(n)
        psi = fm.bump_density(p, q, direction=d / np.linalg.norm(d), sharpness=1.5, degree=12)
        f = lambda y: fm.synthesize_solution(psi, y)
        x = rng.uniform(-1, 1, n)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            orders += [fm.ultrahyperbolic_residual(f, x, h, p, q).order for h in (1e-2, 5e-3)]
        warned += len(caught)
        res = fm.v0_norm_sq(p, q)
        (_, a), (_, b) = res.history[-2:]
        assert math.isfinite(res.value) and res.value > 0
        stab.append(abs(a - b) / abs(b))
    zp = [Fraction(3, 7), Fraction(-5, 2), Fraction(1, 3)]
    zpp = [Fraction(2, 9), Fraction(7, 5), Fraction(-4)]
    x, y = fm.parabolic_embedding(zp, zpp)
    record_property("detail", f"min order {min(orders):.3f}, max refinement change {max(stab):.1e}, "
                              f"null defect {fm.null_defect(x, y)}, {warned} Richardson warnings")
    assert min(orders) >= 1.9 and max(stab) <= 1e-6 and fm.null_defect(x, y) == 0


def test_criterion_13_cli_determinism(record_property, tmp_path):
    configs = [{"command": "optimize", "parameters": {"kind": "onofri_endpoint", "scale": 0.2}, "seed": 4},
               {"command": "zeta", "parameters": {"op": "paneitz", "n": 4}, "seed": 0},
               {"command": "cone", "parameters": {"p": 4, "q": 2}, "seed": 9}]
    same = 0
    for j, c in enumerate(configs):
        path = tmp_path / f"c{j}.json"
        path.write_text(json.dumps(c))
        outs = []
        for k in range(2):
            out = tmp_path / f"r{j}_{k}.json"
            res = subprocess.run([sys.executable, "-m", "confsym", "--config", str(path), "--threads", "1",
                                  "--out", str(out)], capture_output=True)
            assert res.returncode == 0, res.stderr.decode()
            outs.append(out.read_bytes())
        same += outs[0] == outs[1]
    record_property("detail", f"{same}/{len(configs)} configurations byte-identical")
    assert same == len(configs)
