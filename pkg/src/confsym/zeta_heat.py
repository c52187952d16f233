"""Heat traces, heat-invariant fits, spectral zeta functions and determinants.

The spectral zeta function of a model table is continued from its
convergent half-plane by splitting off a head ``k < N`` and treating the tail
with Euler-Maclaurin in the degree variable.  Because eigenvalue and
multiplicity are polynomials in k, the tail integral expands in powers of
1/x with coefficients that are polynomials in s; each power integrates to a
rational function of s.  All those coefficients are kept as exact rationals,
so zeta(0) comes out as an exact rational number and zeta'(0) is obtained by
differentiating the continued expression in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConditioningError, ContinuationError, ConvergenceError, ParameterError
from .model_spectra import SpectrumTable, poly_eval, poly_mul
from .specfun import sphere_volume

MAX_HEAT_TERMS = 5_000_000


# ---------------------------------------------------------------------------
# heat trace
# ---------------------------------------------------------------------------

def _float_poly(coeffs):
    return np.array([float(c) for c in coeffs])


def _eigen_mult_arrays(table: SpectrumTable, ks: np.ndarray):
    if table.eigen_poly is not None and table.mult_poly is not None:
        kf = ks.astype(float)
        lam = np.polynomial.polynomial.polyval(kf, _float_poly(table.eigen_poly))
        mult = np.rint(np.polynomial.polynomial.polyval(kf, _float_poly(table.mult_poly)))
        return lam, mult
    lam = np.array([float(table.eigenvalue(int(k))) for k in ks])
    mult = np.array([float(table.multiplicity(int(k))) for k in ks])
    return lam, mult


def heat_trace(table: SpectrumTable, t: float, rel_tol: float = 1e-17, chunk: int = 512) -> float:
    """Tr exp(-tD) = sum_k mult(k) exp(-t lambda_k), kernel modes included.

    Summation stops once the terms are decreasing with a nonincreasing ratio
    r and the geometric tail bound term * r / (1 - r) is below ``rel_tol``
    times the running total.
    """
    if not t > 0:
        raise ParameterError(f"heat_trace needs t > 0, got {t}")
    if table.order <= 0:
        raise ConvergenceError(f"{table.kind} has no divergent spectrum; its heat trace does not converge")
    lam_last, _ = _eigen_mult_arrays(table, np.array([table.k_min + MAX_HEAT_TERMS]))
    if t * lam_last[0] < 60.0:
        raise ConvergenceError(f"heat trace at t={t} needs more than {MAX_HEAT_TERMS} terms")
    chunk_sums: list[float] = []
    total = 0.0
    k0 = table.k_min
    prev_ratio = None
    while True:
        ks = np.arange(k0, k0 + chunk)
        lam, mult = _eigen_mult_arrays(table, ks)
        terms = mult * np.exp(-t * lam)
        chunk_sums.append(math.fsum(terms.tolist()))
        total = math.fsum(chunk_sums)
        last, before = terms[-1], terms[-2]
        if before > 0 and last <= before:
            ratio = last / before
            decreasing_ratio = prev_ratio is None or ratio <= prev_ratio * (1 + 1e-12)
            if ratio < 1 and decreasing_ratio and last * ratio / (1 - ratio) <= rel_tol * abs(total):
                return total
            prev_ratio = ratio
        elif last == 0 and before == 0 and total > 0:
            return total
        k0 += chunk
        if k0 - table.k_min > MAX_HEAT_TERMS:
            raise ConvergenceError(f"heat trace at t={t} did not converge within {MAX_HEAT_TERMS} terms")


# ---------------------------------------------------------------------------
# heat invariants
# ---------------------------------------------------------------------------

def round_sphere_curvature(n: int):
    """(K, |Ric|^2, |Riem|^2, Delta K) for the unit round S^n."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    return n * (n - 1), n * (n - 1) ** 2, 2 * n * (n - 1), 0


def heat_invariant_U(i: int, n: int, a: float, curvature) -> float:
    """Local heat invariant U_i of Delta + a K at a point with the given curvature data."""
    K, ric2, riem2, lap_k = curvature
    pref = (4 * math.pi) ** (-n / 2)
    if i == 0:
        return pref
    if i == 1:
        return pref * (1 / 6 - a) * K
    if i == 2:
        return pref / 180 * (90 * (1 / 6 - a) ** 2 * K * K - ric2 + riem2 - 30 * (1 / 5 - a) * lap_k)
    raise ParameterError(f"closed forms are available for i <= 2, got {i}")


def integrated_heat_invariant(i: int, n: int, a: float) -> float:
    """Integral of U_i over the unit round S^n."""
    return heat_invariant_U(i, n, a, round_sphere_curvature(n)) * sphere_volume(n)


def yamabe_coupling(n: int) -> Fraction:
    """(n - 2) / (4 (n - 1)), the curvature coefficient of the Yamabe operator."""
    return Fraction(n - 2, 4 * (n - 1))


# ---------------------------------------------------------------------------
# small-time fit
# ---------------------------------------------------------------------------

@dataclass
class HeatFitReport:
    operator: str
    n: int
    d: int
    powers: list
    coefficients: np.ndarray
    uncertainties: np.ndarray
    residual: float
    t_grid: np.ndarray = field(repr=False)

    def coefficient(self, power: float) -> float:
        for p, c in zip(self.powers, self.coefficients):
            if abs(float(p) - power) < 1e-12:
                return float(c)
        raise KeyError(power)

    def uncertainty(self, power: float) -> float:
        for p, u in zip(self.powers, self.uncertainties):
            if abs(float(p) - power) < 1e-12:
                return float(u)
        raise KeyError(power)


# candidate windows in u = t^{1/d} and term counts tried when no window is given
FIT_WINDOWS = ((0.01, 0.15), (0.02, 0.3), (0.04, 0.45), (0.05, 0.5))
FIT_TERMS = (11, 12, 13, 14)


def _fit_once(table, n, d, ts, n_terms):
    u = ts ** (1.0 / d)
    y = np.array([heat_trace(table, t) for t in ts]) * ts ** (n / d)
    scale = u.max()
    design = (u[:, None] / scale) ** np.arange(n_terms)[None, :]
    coef, _, rank, sv = np.linalg.lstsq(design, y, rcond=None)
    if rank < n_terms or sv[-1] < 1e-14 * sv[0]:
        raise ConditioningError(f"design matrix is rank deficient (rank {rank} of {n_terms})")
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return coef / scale ** np.arange(n_terms), resid


def _fit_window(table, n, d, t_min, t_max, num, n_terms, residual_tol):
    if not 0 < t_min < t_max:
        raise ParameterError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
    ts = np.geomspace(t_min, t_max, num)
    coef, resid = _fit_once(table, n, d, ts, n_terms)
    if resid > residual_tol:
        raise ConvergenceError(f"fit residual {resid:.3e} exceeds tolerance {residual_tol:.1e}")
    fine, _ = _fit_once(table, n, d, np.geomspace(t_min, t_max, 2 * num), n_terms)
    more, _ = _fit_once(table, n, d, ts, n_terms + 2)
    unc = np.maximum(np.abs(fine - coef), np.abs(more[:n_terms] - coef))
    powers = [Fraction(k - n, d) for k in range(n_terms)]
    return HeatFitReport(table.kind, n, d, powers, coef, unc, resid, ts)


def heat_coefficients_fit(table: SpectrumTable, n: int | None = None, d: int | None = None,
                          t_min: float | None = None, t_max: float | None = None,
                          num: int = 60, n_terms: int | None = None,
                          residual_tol: float = 1e-9) -> HeatFitReport:
    """Least-squares fit of Tr exp(-tD) against t^{(k-n)/d}, k = 0..n_terms-1.

    All powers k are fitted, odd k included, so that vanishing coefficients
    can be observed rather than assumed.  The uncertainty of each coefficient
    is the larger change seen when the grid is doubled or the number of terms
    is raised by two.  Without an explicit window, every pair from
    FIT_WINDOWS x FIT_TERMS is tried and the fit with the smallest worst-case
    uncertainty over the singular and constant terms (powers <= 0) is kept.
    """
    n = table.dim if n is None else n
    d = table.order if d is None else d
    if t_min is not None or t_max is not None:
        if t_min is None or t_max is None:
            raise ParameterError("give both t_min and t_max, or neither")
        return _fit_window(table, n, d, t_min, t_max, num, n_terms or 12, residual_tol)
    best, best_score = None, math.inf
    for lo, hi in FIT_WINDOWS:
        for k in ((n_terms,) if n_terms else FIT_TERMS):
            try:
                rep = _fit_window(table, n, d, lo ** d, hi ** d, num, k, residual_tol)
            except (ConditioningError, ConvergenceError):
                continue
            score = float(np.max(rep.uncertainties[: n + 1]))
            if score < best_score:
                best, best_score = rep, score
    if best is None:
        raise ConvergenceError("no candidate window produced an acceptable fit")
    return best


# ---------------------------------------------------------------------------
# zeta continuation
# ---------------------------------------------------------------------------

def bernoulli_numbers(m: int) -> list[Fraction]:
    """B_0..B_m with B_1 = -1/2."""
    b = [Fraction(0)] * (m + 1)
    b[0] = Fraction(1)
    for j in range(1, m + 1):
        b[j] = -sum(math.comb(j + 1, i) * b[i] for i in range(j)) / (j + 1)
    return b


def _binom_neg_s(j: int) -> list[Fraction]:
    """binomial(-s, j) as a polynomial in s."""
    poly = [Fraction(1)]
    for t in range(j):
        poly = poly_mul(poly, [Fraction(-t, t + 1), Fraction(-1, t + 1)])
    return poly


def _poly_add(a, b):
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, c in enumerate(b):
        out[i] += c
    return out


def _poly_scale(a, c):
    return [c * x for x in a]


def _poly_deriv(a):
    return [i * a[i] for i in range(1, len(a))] or [0]


def _truncate(a, m):
    return list(a[:m])


@dataclass
class ZetaValue:
    s: float
    value: float
    kernel_dimension_subtracted: int
    exact: Fraction | None = None


@dataclass
class _Continuation:
    head_ks: list
    head_lam: list
    head_mult: list
    kernel_dim: int
    N: int
    M: int
    D: int
    lead: object
    integral_terms: list   # (i, s-poly c_i, power N^{M+1-i})
    em_terms: list         # (weight, s-poly e_r) for -B_{2j}/(2j)! f^{(2j-1)}(N) and f(N)/2
    lam_N: object


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


@lru_cache(maxsize=64)
def _build_continuation(eigen_poly: tuple, mult_poly: tuple, k_min: int, N: int,
                        n_series: int, n_em: int) -> _Continuation:
    lam = list(eigen_poly)
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    mu = list(mult_poly)
    while len(mu) > 1 and mu[-1] == 0:
        mu.pop()
    D, M = len(lam) - 1, len(mu) - 1
    a = lam[-1]
    if D < 1 or not a > 0:
        raise ContinuationError("eigenvalue must be a polynomial of degree >= 1 with positive leading term")

    # head, kernel modes removed
    head_ks, head_lam, head_mult, kernel = [], [], [], 0
    for k in range(k_min, N):
        lk, mk = poly_eval(lam, k), poly_eval(mu, k)
        if mk == 0:
            continue
        if lk == 0:
            kernel += int(mk)
        elif lk < 0:
            raise ParameterError(f"negative eigenvalue {lk} at k={k}; the zeta function needs a positive spectrum")
        else:
            head_ks.append(k)
            head_lam.append(lk)
            head_mult.append(mk)
    for k in range(N, N + 4 * D + 4):
        if not poly_eval(lam, k) > 0:
            raise ContinuationError("eigenvalue is not positive on the tail")
    # lambda(x) = a x^D (1 + delta(1/x)); m(x) = x^M mu_rev(1/x)
    delta = [0] + [lam[D - r] / a for r in range(1, D + 1)]
    if sum(abs(float(c)) * float(N) ** -r for r, c in enumerate(delta)) > 0.6:
        raise ContinuationError(f"tail start N={N} too small for the 1/x expansion to converge")
    mu_rev = [mu[M - l] for l in range(M + 1)]
    c = [[0] for _ in range(n_series)]
    dpow = [Fraction(1)]
    for j in range(n_series):
        prod = _truncate(poly_mul(mu_rev, dpow), n_series)
        bj = _binom_neg_s(j)
        for i, coeff in enumerate(prod):
            if coeff != 0:
                c[i] = _poly_add(c[i], _poly_scale(bj, coeff))
        dpow = _truncate(poly_mul(dpow, delta), n_series)
    integral_terms = [(i, c[i]) for i in range(n_series)]

    # Euler-Maclaurin corrections at x = N
    lam_N = poly_eval(lam, N)
    max_order = 2 * n_em
    # Taylor coefficients in h of lambda(N+h) and m(N+h)
    lam_taylor = _taylor_shift(lam, N)
    mu_taylor = _taylor_shift(mu, N)
    eta = [0] + [x / lam_N for x in lam_taylor[1:]]
    series = [[0] for _ in range(max_order)]   # coefficients of h^r, each an s-poly
    epow = [Fraction(1)]
    for j in range(max_order):
        prod = _truncate(poly_mul(mu_taylor, epow), max_order)
        bj = _binom_neg_s(j)
        for r, coeff in enumerate(prod):
            if coeff != 0:
                series[r] = _poly_add(series[r], _poly_scale(bj, coeff))
        epow = _truncate(poly_mul(epow, eta), max_order)
    bern = bernoulli_numbers(max_order)
    em_terms = [(Fraction(1, 2), series[0])]
    for j in range(1, n_em + 1):
        r = 2 * j - 1
        # f^{(r)}(N) = r! * e_r(s) * lambda(N)^{-s}
        weight = -bern[2 * j] / math.factorial(2 * j) * math.factorial(r)
        em_terms.append((weight, series[r]))
    return _Continuation(head_ks, head_lam, head_mult, kernel, N, M, D, a, integral_terms, em_terms, lam_N)


def _taylor_shift(coeffs, x0):
    """Coefficients of p(x0 + h) in powers of h."""
    out = [0] * len(coeffs)
    for i, c in enumerate(coeffs):
        for j in range(i + 1):
            out[j] += c * math.comb(i, j) * x0 ** (i - j)
    return out


def _poly_div_s(a):
    """a(s) / s for a polynomial with a(0) = 0."""
    if a and a[0] != 0:
        raise ContinuationError("pole of the continued zeta function at s = 0")
    return list(a[1:]) or [0]


def _fl(x) -> float:
    return float(x)


def _tail_terms(cont: _Continuation, s: float, with_derivative: bool):
    """Float contributions (value, derivative) of every tail term at s."""
    N, M, D = cont.N, cont.M, cont.D
    log_a, log_N, log_lamN = math.log(_fl(cont.lead)), math.log(N), math.log(_fl(cont.lam_N))
    vals, ders = [], []
    expo = math.exp(-s * (log_a + D * log_N))
    dexpo = -(log_a + D * log_N)
    for i, ci in cont.integral_terms:
        if i == M + 1:
            q = _poly_div_s(ci)
            pv, pd = poly_eval(q, s) / D, poly_eval(_poly_deriv(q), s) / D
            scale = 1.0
        else:
            den = D * s + i - M - 1
            cv = poly_eval(ci, s)
            if den == 0:
                if cv == 0:
                    continue
                raise ContinuationError(f"s = {s} is a pole of the zeta function")
            pv = cv / den
            pd = poly_eval(_poly_deriv(ci), s) / den - cv * D / den ** 2
            scale = float(N) ** (M + 1 - i)
        vals.append(_fl(pv) * scale * expo)
        if with_derivative:
            ders.append((_fl(pd) + dexpo * _fl(pv)) * scale * expo)
    lexpo = math.exp(-s * log_lamN)
    for weight, er in cont.em_terms:
        ev = poly_eval(er, s)
        vals.append(_fl(weight * ev) * lexpo)
        if with_derivative:
            ed = poly_eval(_poly_deriv(er), s)
            ders.append(_fl(weight) * (_fl(ed) - log_lamN * _fl(ev)) * lexpo)
    return vals, ders


def _tail_exact_at_zero(cont: _Continuation):
    M, D, N = cont.M, cont.D, cont.N
    total = Fraction(0)
    for i, ci in cont.integral_terms:
        if i == M + 1:
            total += Fraction(_poly_div_s(ci)[0]) / D
        else:
            total += Fraction(ci[0]) * Fraction(N) ** (M + 1 - i) / (i - M - 1)
    for weight, er in cont.em_terms:
        total += weight * er[0]
    return total


def _continuation(table: SpectrumTable, N: int, n_series: int, n_em: int) -> _Continuation:
    if table.eigen_poly is None or table.mult_poly is None:
        raise ContinuationError(f"{table.kind} eigenvalues are not polynomial in the degree")
    return _build_continuation(tuple(table.eigen_poly), tuple(table.mult_poly), table.k_min,
                               max(N, table.k_min + 1), n_series, n_em)


def spectral_zeta(table: SpectrumTable, s: float, N: int = 24, n_series: int = 64,
                  n_em: int = 12) -> ZetaValue:
    """Continued zeta function sum' mult * lambda^{-s} (kernel excluded)."""
    cont = _continuation(table, N, n_series, n_em)
    s = float(s)
    head = [float(m) * float(l) ** (-s) for l, m in zip(cont.head_lam, cont.head_mult)]
    tail, _ = _tail_terms(cont, s, with_derivative=False)
    exact = None
    if s == 0.0 and all(_is_exact(x) for x in list(table.eigen_poly) + list(table.mult_poly)):
        exact = sum((Fraction(m) for m in cont.head_mult), Fraction(0)) + _tail_exact_at_zero(cont)
    value = float(exact) if exact is not None else math.fsum(head + tail)
    return ZetaValue(s, value, cont.kernel_dim, exact)


def _dec(x) -> Decimal:
    x = Fraction(x)
    return Decimal(x.numerator) / Decimal(x.denominator)


def zeta_prime_at_zero(table: SpectrumTable, N: int = 24, n_series: int = 64, n_em: int = 12) -> float:
    """zeta'(0) from the continued expression.

    At s = 0 every tail coefficient is rational, so the derivative is a
    rational number plus rational multiples of log a, log N, log lambda(N) and
    the head logarithms.  Those pieces are large and cancel, so they are
    combined in 50-digit decimal arithmetic.
    """
    cont = _continuation(table, N, n_series, n_em)
    if not all(_is_exact(x) for x in list(table.eigen_poly) + list(table.mult_poly)):
        head = [-float(m) * math.log(float(l)) for l, m in zip(cont.head_lam, cont.head_mult)]
        _, tail = _tail_terms(cont, 0.0, with_derivative=True)
        return math.fsum(head + tail)
    M, D, N = cont.M, cont.D, cont.N
    rational, c_log_aN, c_log_lamN = Fraction(0), Fraction(0), Fraction(0)
    for i, ci in cont.integral_terms:
        if i == M + 1:
            q = _poly_div_s(ci)
            pv, pd, scale = Fraction(q[0]) / D, Fraction(_poly_deriv(q)[0]) / D, Fraction(1)
        else:
            den = i - M - 1
            c0, c1 = Fraction(ci[0]), Fraction(_poly_deriv(ci)[0])
            pv, pd = c0 / den, c1 / den - c0 * D / den ** 2
            scale = Fraction(N) ** (M + 1 - i)
        rational += pd * scale
        c_log_aN += pv * scale   # multiplies -(log a + D log N)
    for weight, er in cont.em_terms:
        rational += weight * Fraction(_poly_deriv(er)[0])
        c_log_lamN += weight * Fraction(er[0])   # multiplies -log lambda(N)
    with localcontext() as ctx:
        ctx.prec = 50
        log_aN = _dec(cont.lead).ln() + D * Decimal(N).ln()
        total = _dec(rational) - _dec(c_log_aN) * log_aN - _dec(c_log_lamN) * _dec(cont.lam_N).ln()
        for lam, m in zip(cont.head_lam, cont.head_mult):
            total -= _dec(m) * _dec(lam).ln()
        return float(total)


def zeta_determinant(table: SpectrumTable, **kw) -> float:
    """exp(-zeta'(0)) over the nonzero spectrum."""
    return math.exp(-zeta_prime_at_zero(table, **kw))


def direct_zeta_sum(table: SpectrumTable, s: float, k_max: int = 200_000) -> float:
    """Plain partial sum of mult * lambda^{-s} over nonzero modes, k < k_max."""
    ks = np.arange(table.k_min, k_max)
    lam, mult = _eigen_mult_arrays(table, ks)
    keep = lam > 0
    return math.fsum((mult[keep] * lam[keep] ** (-float(s))).tolist())


@dataclass
class ZetaReport:
    operator: str
    n: int
    d: int
    zeta0: float
    zeta0_exact: Fraction | None
    zeta_prime0: float
    det: float
    kernel_dim: int


def zeta_report(table: SpectrumTable, **kw) -> ZetaReport:
    z0 = spectral_zeta(table, 0.0, **kw)
    zp = zeta_prime_at_zero(table, **kw)
    return ZetaReport(table.kind, table.dim, table.order, z0.value, z0.exact, zp, math.exp(-zp),
                      z0.kernel_dimension_subtracted)


def weyl_exponent(table: SpectrumTable, k_lo: int = 200, k_hi: int = 400) -> float:
    """Slope of log lambda_j against log j over degrees k_lo..k_hi of the sorted spectrum."""
    ks = np.arange(table.k_min, k_hi + 1)
    lam, mult = _eigen_mult_arrays(table, ks)
    counts = np.cumsum(mult)
    sel = ks >= k_lo
    slope, _ = np.polyfit(np.log(counts[sel]), np.log(lam[sel]), 1)
    return float(slope)
