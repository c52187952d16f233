"""Closed-form spectra and sharp constants of the model operators on S^n.

Integer-parameter formulas return ``int`` or ``fractions.Fraction`` values so
that spectral identities can be checked bit-exactly.  Floats appear only
where a real exponent p enters (Knapp-Stein eigenvalues, the HLS constant)
and the caller passed a float.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable

from .errors import ParameterError
from .specfun import gamma_ratio


def _comb(a: int, b: int) -> int:
    return math.comb(a, b) if a >= b >= 0 else 0


def harmonic_dim(p: int, k: int) -> int:
    """dim H^k(R^p), the degree-k spherical harmonics in p variables.

    In one variable only the constants and x are harmonic, in two variables
    every positive degree contributes cos and sin.
    """
    if p < 1 or k < 0:
        raise ParameterError(f"harmonic_dim needs p >= 1 and k >= 0, got ({p}, {k})")
    return _comb(k + p - 1, p - 1) - _comb(k + p - 3, p - 1)


def laplace_eigenvalue(n: int, k: int) -> int:
    _check_sphere(n, k)
    return k * (k + n - 1)


def yamabe_eigenvalue(n: int, k: int) -> Fraction:
    """Eigenvalue of Delta + (n-2)/(4(n-1)) K on degree-k harmonics of the round S^n."""
    _check_sphere(n, k)
    return Fraction(k * (k + n - 1)) + Fraction(n * (n - 2), 4)


def _rising(x: Fraction, m: int) -> Fraction:
    out = Fraction(1)
    for j in range(m):
        out *= x + j
    return out


def gjms_eigenvalue(n: int, r: int, k: int) -> Fraction:
    """Gamma(k + n/2 + r) / Gamma(k + n/2 - r), the unnormalized GJMS eigenvalue.

    For integer r this is the rising product of 2r consecutive factors, which
    vanishes exactly when ``k + n/2 - r`` is a nonpositive integer.
    """
    _check_sphere(n, k)
    if r < 1 or int(r) != r:
        raise ParameterError(f"GJMS order parameter r must be a positive integer, got {r}")
    r = int(r)
    if n % 2 == 0 and r > n // 2:
        raise ParameterError(f"in even dimension n={n} the GJMS operator P_2r needs r <= n/2, got r={r}")
    return _rising(Fraction(2 * k + n - 2 * r, 2), 2 * r)


def gjms_normalization(n: int, r) -> float:
    """Gamma(n/2 - r) / Gamma(n/2 + r); undefined at the critical order r = n/2."""
    a = n / 2 - float(r)
    if a <= 0 and a.is_integer():
        raise ParameterError(f"normalization Gamma(n/2 - r)/Gamma(n/2 + r) has a pole at n={n}, r={r}")
    return gamma_ratio(a, n / 2 + float(r))


def dual_exponent(p):
    """q = p / (p - 1); exact when p is rational."""
    if isinstance(p, Rational):
        p = Fraction(p)
    return p / (p - 1)


def _check_hls_exponent(p, allow_one: bool):
    if not (1 <= p < 2):
        raise ParameterError(f"exponent p must satisfy 1 <= p < 2, got {p}")
    if p == 1 and not allow_one:
        raise ParameterError("p = 1 has a degenerate dual exponent; use the endpoint inequality")


def knapp_stein_gamma(n: int, p, k: int):
    """Eigenvalue of the normalized Knapp-Stein operator on degree-k harmonics.

    gamma_k = Gamma(n/p) Gamma(n/q + k) / (Gamma(n/q) Gamma(n/p + k)), q the
    dual exponent.  Exact (Fraction) for rational p, float otherwise.
    """
    _check_hls_exponent(p, allow_one=False)
    if k < 0:
        raise ParameterError(f"degree must be >= 0, got {k}")
    if isinstance(p, Rational):
        p = Fraction(p)
        a, b = n / dual_exponent(p), n / p
        out = Fraction(1)
        for j in range(k):
            out *= (a + j) / (b + j)
        return out
    p = float(p)
    a, b = n * (p - 1) / p, n / p
    return gamma_ratio(a + k, b + k) / gamma_ratio(a, b)


def hls_constant(n: int, p) -> float:
    """Sharp Hardy-Littlewood-Sobolev constant A_p for the kernel |x-y|^{-2n/p'}."""
    _check_hls_exponent(float(p), allow_one=True)
    p = float(p)
    inv_pp = 1.0 - 1.0 / p  # 1/p'
    return (math.pi ** (n * inv_pp)
            * gamma_ratio(n * (1.0 / p - 0.5), n / p)
            * gamma_ratio(n / 2, n) ** (1.0 - 2.0 / p))


def log_sobolev_coeff(n: int, k: int) -> Fraction:
    """(n/2) sum_{l<k} 1 / (n/2 + l)."""
    if k < 1:
        raise ParameterError(f"log-Sobolev coefficients start at k = 1, got {k}")
    half = Fraction(n, 2)
    return half * sum((1 / (half + l) for l in range(k)), Fraction(0))


def onofri_coeff(n: int, k: int) -> Fraction:
    """(1/2n) Gamma(n+k) / (Gamma(n) Gamma(k)), weight of degree k in the p = 1 endpoint inequality."""
    if k < 1:
        return Fraction(0)
    return Fraction(_rising(Fraction(k), n), 2 * n * math.factorial(n - 1))


def universal_hessian_eigenvalue(n: int, j: int, q: int) -> int:
    """Gamma(n+j+2) Gamma(n+q-1) / (Gamma(j+2) Gamma(q-1)) on the K-type (2+j, q)."""
    if n < 4:
        raise ParameterError(f"universal Hessian formula assumes n >= 4, got {n}")
    if j < 0 or q not in (0, 1, 2):
        raise ParameterError(f"K-type (2+j, q) needs j >= 0 and q in {{0,1,2}}, got ({j}, {q})")
    if q < 2:
        return 0  # 1/Gamma(q-1) vanishes
    return (math.factorial(n + j + 1) // math.factorial(j + 1)) * math.factorial(n + q - 2) // math.factorial(q - 2)


def helmholtz_numbers(n: int) -> list[int]:
    """l (l + n - 1) for l = -1, ..., -(n/2 - 1)."""
    if n % 2 or n < 4:
        raise ParameterError(f"Helmholtz numbers need even n >= 4, got {n}")
    m = n // 2 - 1
    return [l * (l + n - 1) for l in range(-1, -m - 1, -1)]


def gjms_factorization_poly(n: int) -> list[int]:
    """Integer coefficients (constant term first) of prod_l (x + lambda_l)."""
    coeffs = [1]
    for lam in helmholtz_numbers(n):
        coeffs = poly_mul(coeffs, [lam, 1])
    return coeffs


# ---------------------------------------------------------------------------
# polynomial helpers (coefficient lists, constant term first)
# ---------------------------------------------------------------------------

def poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def poly_eval(coeffs, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _interpolate(values: list, xs: list) -> list[Fraction]:
    """Coefficients of the polynomial through (xs, values), exact."""
    out = [Fraction(0)] * len(xs)
    for i, (xi, yi) in enumerate(zip(xs, values)):
        basis, denom = [Fraction(1)], Fraction(1)
        for j, xj in enumerate(xs):
            if j != i:
                basis = poly_mul(basis, [Fraction(-xj), Fraction(1)])
                denom *= xi - xj
        for d, c in enumerate(basis):
            out[d] += Fraction(yi) * c / denom
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def multiplicity_poly(n: int) -> list[Fraction]:
    """dim H^k(R^{n+1}) as a polynomial in k, valid for every k >= 0."""
    xs = list(range(n + 1))
    return _interpolate([harmonic_dim(n + 1, k) for k in xs], xs)


# ---------------------------------------------------------------------------
# spectrum tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumLine:
    k: int
    eigenvalue: object
    multiplicity: int


@dataclass(frozen=True)
class SpectrumTable:
    """Eigenvalue lines of a model operator plus closed forms for every degree.

    ``eigen_poly`` / ``mult_poly`` hold the eigenvalue and multiplicity as
    polynomials in the degree k (for k >= k_min) when such a form exists; the
    zeta continuation requires them.  ``order`` is the differential order d
    and ``dim`` the dimension of the underlying manifold.
    """

    kind: str
    params: dict
    K_max: int
    dim: int
    order: int
    k_min: int
    eigen_fn: Callable = field(repr=False, compare=False)
    mult_fn: Callable = field(repr=False, compare=False)
    eigen_poly: tuple | None = None
    mult_poly: tuple | None = None

    def eigenvalue(self, k: int):
        return self.eigen_fn(k)

    def multiplicity(self, k: int) -> int:
        return self.mult_fn(k)

    @property
    def lines(self) -> list[SpectrumLine]:
        return [SpectrumLine(k, self.eigen_fn(k), self.mult_fn(k))
                for k in range(self.k_min, self.K_max + 1)]

    @property
    def descriptor(self) -> dict:
        return {"kind": self.kind, **{k: str(v) for k, v in self.params.items()}, "dim": self.dim}

    def scaled(self, c) -> "SpectrumTable":
        """Same table with every eigenvalue multiplied by c."""
        c = Fraction(c) if isinstance(c, Rational) else c
        params = dict(self.params, scale=c * self.params.get("scale", 1))
        return SpectrumTable(
            kind=self.kind, params=params, K_max=self.K_max, dim=self.dim, order=self.order,
            k_min=self.k_min, eigen_fn=lambda k, f=self.eigen_fn: c * f(k), mult_fn=self.mult_fn,
            eigen_poly=None if self.eigen_poly is None else tuple(c * a for a in self.eigen_poly),
            mult_poly=self.mult_poly)

    def to_csv(self, path, exact: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "eigenvalue", "multiplicity"])
            for line in self.lines:
                writer.writerow([line.k, format_number(line.eigenvalue, exact), line.multiplicity])


def format_number(x, exact: bool = True) -> str:
    """'num/den' for exact rationals, 17 significant digits otherwise."""
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        x = Fraction(x)
        if exact:
            return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
        x = float(x)
    return format(float(x), ".17g")


def spectrum_table(kind: str, params: dict | None = None, K_max: int = 10) -> SpectrumTable:
    """Assemble a table for one of: laplace, yamabe, gjms, knapp_stein, integers.

    ``params`` carries n (sphere dimension), r for gjms, p for knapp_stein.
    ``integers`` is the sequence 1, 2, 3, ... with unit multiplicities.
    """
    params = dict(params or {})
    kind = kind.replace("-", "_").lower()
    if kind == "integers":
        return SpectrumTable(kind, params, K_max, dim=1, order=1, k_min=1,
                             eigen_fn=lambda k: Fraction(k), mult_fn=lambda k: 1,
                             eigen_poly=(Fraction(0), Fraction(1)), mult_poly=(Fraction(1),))
    n = int(params["n"])
    _check_sphere(n, 0)

    def mult(k):
        return harmonic_dim(n + 1, k)

    mpoly = tuple(multiplicity_poly(n))
    if kind in ("laplace", "laplacian"):
        return SpectrumTable("laplace", params, K_max, n, 2, 0, lambda k: Fraction(laplace_eigenvalue(n, k)),
                             mult, (Fraction(0), Fraction(n - 1), Fraction(1)), mpoly)
    if kind == "yamabe":
        return SpectrumTable("yamabe", params, K_max, n, 2, 0, lambda k: yamabe_eigenvalue(n, k), mult,
                             (Fraction(n * (n - 2), 4), Fraction(n - 1), Fraction(1)), mpoly)
    if kind in ("gjms", "paneitz"):
        r = int(params.get("r", 2 if kind == "paneitz" else 1))
        params["r"] = r
        gjms_eigenvalue(n, r, 0)  # validates (n, r)
        poly = [Fraction(1)]
        for j in range(2 * r):
            poly = poly_mul(poly, [Fraction(2 * j + n - 2 * r, 2), Fraction(1)])
        return SpectrumTable("gjms", params, K_max, n, 2 * r, 0, lambda k: gjms_eigenvalue(n, r, k), mult,
                             tuple(poly), mpoly)
    if kind == "knapp_stein":
        p = params["p"]
        knapp_stein_gamma(n, p, 0)
        return SpectrumTable("knapp_stein", params, K_max, n, 0, 0, lambda k: knapp_stein_gamma(n, p, k), mult)
    raise ParameterError(f"unknown spectrum kind {kind!r}")


def _check_sphere(n: int, k: int):
    if n < 2:
        raise ParameterError(f"sphere dimension must be >= 2, got {n}")
    if k < 0:
        raise ParameterError(f"degree must be >= 0, got {k}")
