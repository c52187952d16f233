import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from confsym.errors import ConditioningError, ContinuationError, ConvergenceError, ParameterError
from confsym.model_spectra import poly_eval, spectrum_table
from confsym.specfun import sphere_volume
from confsym.zeta_heat import (bernoulli_numbers, heat_coefficients_fit, heat_invariant_U, heat_trace,
                               integrated_heat_invariant, round_sphere_curvature, spectral_zeta,
                               weyl_exponent, yamabe_coupling, zeta_determinant, zeta_prime_at_zero,
                               zeta_report)

MODEL_TABLES = [("laplace", {"n": 2}), ("laplace", {"n": 3}), ("yamabe", {"n": 3}), ("yamabe", {"n": 4}),
                ("yamabe", {"n": 5}), ("paneitz", {"n": 4}), ("gjms", {"n": 6, "r": 2}), ("integers", {})]


def _table(kind, params):
    return spectrum_table(kind, params, 10)


def _fsum_trace(table, t, k_max):
    return math.fsum(table.multiplicity(k) * math.exp(-t * float(table.eigenvalue(k)))
                     for k in range(table.k_min, k_max))


def test_heat_trace_laplace_s2():
    t = spectrum_table("laplace", {"n": 2})
    assert heat_trace(t, 1.0) == pytest.approx(1.418443, abs=1e-6)
    ref = mpmath.nsum(lambda k: (2 * k + 1) * mpmath.exp(-k * (k + 1)), [0, mpmath.inf])
    assert heat_trace(t, 1.0) == pytest.approx(float(ref), rel=1e-15)


def test_heat_trace_yamabe_s4_compensated():
    t = spectrum_table("yamabe", {"n": 4})
    assert abs(heat_trace(t, 1.0) - _fsum_trace(t, 1.0, 60)) <= 1e-12


def test_heat_trace_small_t_oracle():
    t = spectrum_table("yamabe", {"n": 4})
    assert heat_trace(t, 1e-3) == pytest.approx(_fsum_trace(t, 1e-3, 2000), rel=1e-13)


def test_heat_trace_large_t_dominated_by_lowest_mode():
    for kind, params in [("laplace", {"n": 2}), ("yamabe", {"n": 4})]:
        tab = spectrum_table(kind, params)
        lam0, m0 = float(tab.eigenvalue(0)), tab.multiplicity(0)
        t = 20.0
        assert heat_trace(tab, t) == pytest.approx(m0 * math.exp(-t * lam0), rel=1e-12)


def test_heat_trace_errors():
    with pytest.raises(ParameterError):
        heat_trace(spectrum_table("laplace", {"n": 2}), 0.0)
    with pytest.raises(ConvergenceError):
        heat_trace(spectrum_table("knapp_stein", {"n": 2, "p": Fraction(3, 2)}), 1.0)
    with pytest.raises(ConvergenceError):
        heat_trace(spectrum_table("laplace", {"n": 2}), 1e-14)


def test_round_sphere_curvature():
    # |Ric|^2 = n (n-1)^2 is 2 on S^2 (Ric = g); n = 3, 4 follow the same formula
    assert round_sphere_curvature(2) == (2, 2, 4, 0)
    assert round_sphere_curvature(4) == (12, 36, 24, 0)
    assert round_sphere_curvature(3) == (6, 12, 12, 0)


def test_heat_invariants_closed_forms():
    for n in range(2, 8):
        assert heat_invariant_U(0, n, 0.3, round_sphere_curvature(n)) == pytest.approx((4 * math.pi) ** (-n / 2))
    assert integrated_heat_invariant(1, 2, 0.0) == pytest.approx(1 / 3, rel=1e-14)
    assert integrated_heat_invariant(2, 4, 1 / 6) == pytest.approx(-1 / 90, rel=1e-13)
    assert integrated_heat_invariant(1, 4, 1 / 6) == 0.0
    assert yamabe_coupling(4) == Fraction(1, 6)
    with pytest.raises(ParameterError):
        heat_invariant_U(3, 4, 0.0, round_sphere_curvature(4))


def test_fit_laplace_s2():
    rep = heat_coefficients_fit(spectrum_table("laplace", {"n": 2}))
    assert abs(rep.coefficient(-1) - 1) <= 1e-6
    assert abs(rep.coefficient(0) - 1 / 3) <= 1e-6
    assert rep.residual <= 1e-9


def test_fit_yamabe_s4_dual_method():
    rep = heat_coefficients_fit(spectrum_table("yamabe", {"n": 4}))
    assert abs(rep.coefficient(0) - (-1 / 90)) <= 1e-6
    assert abs(rep.coefficient(0) - integrated_heat_invariant(2, 4, 1 / 6)) <= 1e-6
    assert abs(rep.coefficient(-2) - sphere_volume(4) / (4 * math.pi) ** 2) <= 1e-9


@pytest.mark.parametrize("n", [3, 5])
def test_fit_odd_vanishing(n):
    rep = heat_coefficients_fit(spectrum_table("yamabe", {"n": n}))
    assert abs(rep.coefficient(0)) <= 1e-6


def test_fit_uncertainty_covers_refinement():
    tab = spectrum_table("laplace", {"n": 2})
    rep = heat_coefficients_fit(tab, t_min=0.02 ** 2, t_max=0.3 ** 2, n_terms=12)
    finer = heat_coefficients_fit(tab, t_min=0.02 ** 2, t_max=0.3 ** 2, n_terms=12, num=120)
    assert np.all(np.abs(finer.coefficients - rep.coefficients) <= rep.uncertainties * (1 + 1e-9) + 1e-15)


def test_fit_errors():
    tab = spectrum_table("laplace", {"n": 2})
    with pytest.raises(ParameterError):
        heat_coefficients_fit(tab, t_min=0.1, t_max=0.01)
    with pytest.raises(ParameterError):
        heat_coefficients_fit(tab, t_min=0.1)
    with pytest.raises(ConditioningError):
        heat_coefficients_fit(tab, t_min=1e-4, t_max=1.001e-4, n_terms=30, num=40)


def test_bernoulli():
    b = bernoulli_numbers(12)
    assert b[:5] == [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30)]
    assert b[12] == Fraction(-691, 2730)


def test_zeta_zero_values():
    z = spectral_zeta(spectrum_table("laplace", {"n": 2}), 0.0)
    assert z.exact == Fraction(-2, 3) and z.kernel_dimension_subtracted == 1
    z = spectral_zeta(spectrum_table("yamabe", {"n": 4}), 0.0)
    assert z.exact == Fraction(-1, 90) and z.kernel_dimension_subtracted == 0
    assert spectral_zeta(spectrum_table("integers", {}), 0.0).exact == Fraction(-1, 2)


def test_conformal_index_matches_heat_invariant():
    for kind, n, a, i in [("laplace", 2, 0.0, 1), ("yamabe", 4, 1 / 6, 2), ("laplace", 4, 0.0, 2)]:
        z = spectral_zeta(spectrum_table(kind, {"n": n}), 0.0)
        assert float(z.exact) + z.kernel_dimension_subtracted == pytest.approx(integrated_heat_invariant(i, n, a), abs=1e-12)


def test_paneitz_index_matches_fit():
    tab = spectrum_table("paneitz", {"n": 4})
    z = spectral_zeta(tab, 0.0)
    assert z.exact == Fraction(-38, 45) and z.kernel_dimension_subtracted == 1
    rep = heat_coefficients_fit(tab)
    assert abs(rep.coefficient(0) - (float(z.exact) + 1)) <= 1e-6


def _richardson_oracle(table, s):
    def term(k):
        k = int(k)
        lam = Fraction(poly_eval(table.eigen_poly, k))
        if lam == 0:
            return mpmath.mpf(0)
        m = Fraction(poly_eval(table.mult_poly, k))
        return mpmath.mpf(m.numerator) / m.denominator * (mpmath.mpf(lam.numerator) / lam.denominator) ** (-s)
    with mpmath.workdps(30):
        return float(mpmath.nsum(term, [table.k_min, mpmath.inf], method="r"))


# s in {2, 3, 4} wherever the defining sum converges (s > n / d)
CONVERGENT = [(kind, params, s) for kind, params in MODEL_TABLES for s in (2, 3, 4)
              if s > _table(kind, params).dim / _table(kind, params).order]


@pytest.mark.parametrize("kind, params, s", CONVERGENT)
def test_continuation_matches_convergent_sums(kind, params, s):
    tab = _table(kind, params)
    ref = _richardson_oracle(tab, s)
    assert abs(spectral_zeta(tab, s).value - ref) <= 1e-10 * max(1.0, abs(ref))


def test_known_zeta_values():
    ints = spectrum_table("integers", {})
    assert spectral_zeta(ints, 2).value == pytest.approx(math.pi ** 2 / 6, rel=1e-13)
    assert spectral_zeta(ints, -1).value == pytest.approx(-1 / 12, rel=1e-12)
    assert spectral_zeta(spectrum_table("yamabe", {"n": 4}), 3).value == pytest.approx(1 / 6, rel=1e-13)


def test_zeta_stable_in_split_point():
    tab = spectrum_table("yamabe", {"n": 3})
    vals = [zeta_prime_at_zero(tab, N=N) for N in (16, 24, 40)]
    assert max(vals) - min(vals) <= 1e-11


def test_determinants():
    with mpmath.workdps(30):
        oracle = float(mpmath.exp(mpmath.mpf(1) / 2 - 4 * mpmath.zeta(-1, derivative=1)))
    assert abs(zeta_determinant(spectrum_table("laplace", {"n": 2})) - oracle) <= 1e-4
    assert zeta_determinant(spectrum_table("laplace", {"n": 2})) == pytest.approx(oracle, rel=1e-12)
    assert abs(zeta_determinant(spectrum_table("integers", {})) - math.sqrt(2 * math.pi)) <= 1e-6


@pytest.mark.parametrize("kind, params", [("laplace", {"n": 2}), ("yamabe", {"n": 4}), ("yamabe", {"n": 3})])
def test_determinant_scaling(kind, params):
    tab = spectrum_table(kind, params)
    c = Fraction(3, 2)
    z0 = spectral_zeta(tab, 0.0).value
    assert zeta_determinant(tab.scaled(c)) == pytest.approx(zeta_determinant(tab) * float(c) ** z0, rel=1e-12)


def test_continuation_error():
    with pytest.raises(ContinuationError):
        spectral_zeta(spectrum_table("knapp_stein", {"n": 2, "p": 1.5}), 0.0)


def test_report():
    rep = zeta_report(spectrum_table("yamabe", {"n": 4}))
    assert rep.zeta0_exact == Fraction(-1, 90)
    assert rep.det == pytest.approx(math.exp(-rep.zeta_prime0))
    assert (rep.operator, rep.n, rep.d, rep.kernel_dim) == ("yamabe", 4, 2, 0)


@pytest.mark.parametrize("kind, params", MODEL_TABLES[:-1])
def test_weyl_law(kind, params):
    tab = _table(kind, params)
    assert weyl_exponent(tab, 2000, 4000) == pytest.approx(tab.order / tab.dim, rel=0.02)
