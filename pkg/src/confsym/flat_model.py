"""The flat picture of the minimal representation on R^{p-1, q-1}.

Points of the null cone C = {Q(zeta) = 0} are written zeta = (r w1, r w2) with
w1 on S^{p-2} and w2 on S^{q-2}, so that the Euclidean norm is |zeta| = sqrt(2) r.
The invariant measure is taken as d mu = (1/2) r^{n-3} dr d sigma(w1) d sigma(w2),
n = p + q - 2, which has the homogeneity of delta(Q); its overall constant is a
convention and every absolute norm below carries it.

Plane waves use the Euclidean pairing, so the ultrahyperbolic operator acts as
box e^{i<x, zeta>} = -Q(zeta) e^{i<x, zeta>}.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError, ParameterError
from .specfun import bessel_k, sphere_volume
from .sphere_geometry import QuadratureRule, sphere_rule


# ---------------------------------------------------------------------------
# embedding and cone geometry
# ---------------------------------------------------------------------------

def parabolic_embedding(zp, zpp):
    """(z', z'') -> (x, y) in R^{p, q} with x = (1 - s/4, z'), y = (z'', 1 + s/4), s = |z'|^2 - |z''|^2.

    Works on Fractions (exact) or floats; the image satisfies |x|^2 = |y|^2.
    """
    zp, zpp = list(zp), list(zpp)
    s = sum(v * v for v in zp) - sum(v * v for v in zpp)
    quarter = Fraction(1, 4) if all(isinstance(v, (int, Fraction)) for v in zp + zpp) else 0.25
    x = [1 - s * quarter] + zp
    y = zpp + [1 + s * quarter]
    return x, y


def null_defect(x, y):
    """|x|^2 - |y|^2."""
    return sum(v * v for v in x) - sum(v * v for v in y)


def project_to_product(x, y):
    """Radial projection of a null vector onto S^{p-1} x S^{q-1}."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return x / np.linalg.norm(x), y / np.linalg.norm(y)


def quadratic_form(p: int, q: int, zeta) -> np.ndarray:
    """Q(zeta) = zeta_1^2 + ... + zeta_{p-1}^2 - zeta_p^2 - ... - zeta_n^2."""
    z = np.atleast_2d(np.asarray(zeta, dtype=float))
    return np.sum(z[:, :p - 1] ** 2, axis=1) - np.sum(z[:, p - 1:] ** 2, axis=1)


@dataclass(frozen=True)
class ConePoint:
    r: float
    omega1: tuple
    omega2: tuple

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"cone radius must be positive, got {self.r}")
        for w in (self.omega1, self.omega2):
            if abs(math.fsum(v * v for v in w) - 1.0) > 1e-12:
                raise ParameterError("cone directions must be unit vectors")

    @property
    def zeta(self) -> np.ndarray:
        return self.r * np.concatenate([self.omega1, self.omega2])

    def Q(self) -> float:
        return self.r * self.r * (math.fsum(v * v for v in self.omega1) - math.fsum(v * v for v in self.omega2))


def cone_measure_weight(p: int, q: int, r):
    """Radial density (1/2) r^{n-3}, n = p + q - 2, of the cone measure."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("cone radius must be positive")
    out = 0.5 * r ** (p + q - 5)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# lowest K-type
# ---------------------------------------------------------------------------

def _check_v0(p: int, q: int):
    if (p + q) % 2 or p + q <= 4 or not p >= q >= 2:
        raise DomainError(f"v0 needs p + q even, p + q > 4 and p >= q >= 2, got ({p}, {q})")


def bessel_ktype_v0(p: int, q: int, r, convention: str = "euclidean"):
    """v0 = |zeta|^{(3-q)/2} K_{(q-3)/2}(2 |zeta|) at cone radius r.

    ``euclidean`` uses |zeta| = sqrt(2) r, the Euclidean norm of the cone point;
    ``radial`` substitutes r itself.
    """
    _check_v0(p, q)
    if convention == "euclidean":
        rho = math.sqrt(2.0) * np.asarray(r, dtype=float)
    elif convention == "radial":
        rho = np.asarray(r, dtype=float)
    else:
        raise ParameterError(f"unknown convention {convention!r}")
    nu = (q - 3) / 2
    out = rho ** (-nu) * bessel_k(nu, 2 * rho)
    return float(out) if np.ndim(out) == 0 else out


def _gl_panels(edges, order):
    x, w = roots_legendre(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def _radial_integral(fn, r_max, order, r_min=1e-14):
    # geometric panels towards 0 (integrable singularities there), uniform panels beyond 1
    geo = np.geomspace(r_min, min(1.0, r_max), 48)
    edges = np.concatenate([[0.0], geo])
    if r_max > 1.0:
        edges = np.concatenate([edges, np.linspace(1.0, r_max, int(math.ceil(r_max - 1)) * 2 + 1)[1:]])
    nodes, weights = _gl_panels(edges, order)
    return math.fsum((weights * fn(nodes)).tolist())


def v0_tail_radius(p: int, q: int, convention: str = "euclidean", rel: float = 1e-18) -> float:
    """Radius beyond which K_nu(2 |zeta|) has dropped below rel times its value at |zeta| = 1/2."""
    _check_v0(p, q)
    nu = abs(q - 3) / 2
    scale = math.sqrt(2.0) if convention == "euclidean" else 1.0
    ref = float(bessel_k(nu, 1.0))
    r = 1.0
    while float(bessel_k(nu, 2 * scale * r)) >= rel * ref:
        r *= 1.25
    return r


@dataclass
class V0Norm:
    p: int
    q: int
    value: float
    radial_integral: float
    window: float
    history: list
    convention: str


def v0_norm_sq(p: int, q: int, convention: str = "euclidean", tol: float = 1e-12,
               r_max: float | None = None) -> V0Norm:
    """Vol(S^{p-2}) Vol(S^{q-2}) times the integral of v0^2 (1/2) r^{n-3} dr.

    The Gauss-Legendre order is doubled until successive values agree to tol.
    """
    _check_v0(p, q)
    R = r_max or v0_tail_radius(p, q, convention)

    def integrand(r):
        return bessel_ktype_v0(p, q, r, convention) ** 2 * cone_measure_weight(p, q, r)

    history = []
    order = 8
    prev = None
    while order <= 256:
        val = _radial_integral(integrand, R, order)
        history.append((order, val))
        if prev is not None and abs(val - prev) <= tol * abs(val):
            break
        prev = val
        order *= 2
    rad = history[-1][1]
    vol = sphere_volume(p - 2) * sphere_volume(q - 2)
    return V0Norm(p, q, vol * rad, rad, R, history, convention)


def v0_norm_windows(p: int, q: int, windows, convention: str = "euclidean") -> list[float]:
    """v0_norm_sq truncated to each radial window in turn."""
    return [v0_norm_sq(p, q, convention, r_max=w).value for w in windows]


# ---------------------------------------------------------------------------
# cone densities and synthesis
# ---------------------------------------------------------------------------

@dataclass
class ConeDensity:
    """Samples psi on (r nodes) x (S^{p-2} nodes) x (S^{q-2} nodes) with cone-measure weights."""

    p: int
    q: int
    r_nodes: np.ndarray
    r_weights: np.ndarray   # include (1/2) r^{n-3}
    rule1: QuadratureRule
    rule2: QuadratureRule
    values: np.ndarray      # shape (nr, m1, m2)
    window: tuple

    @classmethod
    def from_function(cls, p: int, q: int, fn, window=(0.5, 1.5), n_r: int = 24, degree: int = 16):
        """Tabulate psi = fn(zeta) with zeta of shape (..., n); psi must vanish near the window ends."""
        a, b = window
        if not 0 < a < b:
            raise ParameterError(f"window must satisfy 0 < a < b, got {window}")
        x, w = roots_legendre(n_r)
        r = 0.5 * (b - a) * x + 0.5 * (b + a)
        wr = 0.5 * (b - a) * w * cone_measure_weight(p, q, r)
        rule1, rule2 = sphere_rule(p - 2, degree), sphere_rule(q - 2, degree)
        zeta = _cone_grid(r, rule1.nodes, rule2.nodes)
        vals = np.asarray(fn(zeta))
        return cls(p, q, r, wr, rule1, rule2, vals, (a, b))

    @property
    def zeta(self) -> np.ndarray:
        return _cone_grid(self.r_nodes, self.rule1.nodes, self.rule2.nodes)

    @property
    def weights(self) -> np.ndarray:
        return (self.r_weights[:, None, None] * self.rule1.weights[None, :, None]
                * self.rule2.weights[None, None, :])

    def norm_sq(self) -> float:
        return math.fsum((self.weights * np.abs(self.values) ** 2).ravel().tolist())

    def __add__(self, other: "ConeDensity") -> "ConeDensity":
        if self.values.shape != other.values.shape or self.window != other.window:
            raise ParameterError("cone densities must share their grid")
        return ConeDensity(self.p, self.q, self.r_nodes, self.r_weights, self.rule1, self.rule2,
                           self.values + other.values, self.window)


def _cone_grid(r, w1, w2):
    nr, m1, m2 = len(r), len(w1), len(w2)
    z1 = np.broadcast_to(r[:, None, None, None] * w1[None, :, None, :], (nr, m1, m2, w1.shape[1]))
    z2 = np.broadcast_to(r[:, None, None, None] * w2[None, None, :, :], (nr, m1, m2, w2.shape[1]))
    return np.concatenate([z1, z2], axis=-1)


def bump_density(p: int, q: int, window=(0.5, 1.5), direction=None, sharpness: float = 0.0,
                 n_r: int = 24, degree: int = 16) -> ConeDensity:
    """Smooth compactly supported density: a C-infinity radial bump times exp(sharpness * <w, direction>)."""
    a, b = window
    n = p + q - 2
    d = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)

    def fn(zeta):
        r = np.linalg.norm(zeta, axis=-1) / math.sqrt(2.0)
        t = (2 * r - a - b) / (b - a)
        with np.errstate(divide="ignore", over="ignore"):
            bump = np.where(np.abs(t) < 1, np.exp(-1.0 / np.maximum(1 - t * t, 1e-300)), 0.0)
        ang = np.exp(sharpness * (zeta @ d) / np.maximum(r, 1e-300)) if sharpness else 1.0
        return bump * ang

    return ConeDensity.from_function(p, q, fn, window, n_r, degree)


def synthesize_solution(psi: ConeDensity, x) -> np.ndarray:
    """f(x) = integral of e^{i <x, zeta>} psi(zeta) d mu(zeta), one value per row of x."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    z = psi.zeta.reshape(-1, psi.p + psi.q - 2)
    wpsi = (psi.weights * psi.values).ravel()
    phase = np.exp(1j * (pts @ z.T))
    return phase @ wpsi


def plane_wave(zeta):
    z = np.asarray(zeta, dtype=float)

    def f(x):
        return np.exp(1j * (np.atleast_2d(x) @ z))

    return f


# ---------------------------------------------------------------------------
# ultrahyperbolic residual
# ---------------------------------------------------------------------------

def box_fd(f, x, h: float, p: int, q: int) -> complex:
    """Signature-weighted central second differences at x: sum_j s_j (f(x+he_j) - 2f(x) + f(x-he_j)) / h^2."""
    x = np.asarray(x, dtype=float)
    n = p + q - 2
    if x.shape != (n,):
        raise ParameterError(f"x must have {n} coordinates")
    eye = np.eye(n)
    pts = np.concatenate([x[None, :] + h * eye, x[None, :] - h * eye, x[None, :]])
    vals = np.asarray(f(pts)).ravel()
    plus, minus, centre = vals[:n], vals[n:2 * n], vals[-1]
    sign = np.array([1.0] * (p - 1) + [-1.0] * (q - 1))
    return complex(np.sum(sign * (plus - 2 * centre + minus)) / (h * h))


@dataclass
class ResidualReport:
    h: float
    residual: float
    residual_half: float
    order: float
    constant: float   # residual / h^2


def ultrahyperbolic_residual(f, x, h: float, p: int, q: int, warn: bool = True) -> ResidualReport:
    """|box_h f(x)| at steps h and h/2, with the observed order log2 of their ratio.

    A genuine solution leaves only the O(h^2) truncation error, so the ratio is
    near 4; a deviation beyond 20% triggers a warning.
    """
    r1 = abs(box_fd(f, x, h, p, q))
    r2 = abs(box_fd(f, x, h / 2, p, q))
    order = math.log2(r1 / r2) if r1 > 0 and r2 > 0 else math.inf
    if warn and r2 > 0 and abs(r1 / r2 - 4) > 0.8:
        warnings.warn(f"Richardson ratio {r1 / r2:.3f} is not close to 4 at h = {h}", RuntimeWarning)
    return ResidualReport(h, r1, r2, order, r1 / (h * h))
