"""Quadrature, spherical-harmonic transforms and the conformal group of S^n.

Conventions
-----------
* Points of S^n are unit vectors in R^{n+1}; arrays of points have shape
  ``(m, n + 1)``.
* The Laplacian is the nonnegative one, ``Delta = -div grad``, so degree-k
  harmonics have eigenvalue ``k (k + n - 1)``.
* Harmonic coefficients are with respect to a real basis that is orthonormal
  for the unnormalized surface measure.  Coefficients are stored degree by
  degree; ``degree_offsets(n, L)`` gives the block boundaries.
* Gradients are tangential gradients, returned as ambient vectors.

The basis of each degree-k harmonic space is built from zonal Gegenbauer
polynomials ``C_k^{(n-1)/2}(x . a_i)`` for a fixed overcomplete set of
directions ``a_i``, orthonormalized with an exact quadrature.  Because every
basis function is an explicit polynomial in the ambient coordinates, values
and gradients are available at arbitrary points without any coordinate
frames.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import eval_gegenbauer, roots_jacobi

from .errors import AliasingError, DomainError, ParameterError, ResourceError
from .specfun import sphere_volume

MAX_NODES = 2_000_000
_BASIS_OVERSAMPLING = 2


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on S^n, exact for polynomials up to ``exactness_degree``."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def volume(self) -> float:
        return math.fsum(self.weights)

    def integrate(self, values) -> float:
        """Integral of sampled values against surface measure (compensated sum)."""
        return math.fsum(np.asarray(values, dtype=float) * self.weights)

    def mean(self, values) -> float:
        """Integral against normalized surface measure."""
        return self.integrate(values) / sphere_volume(self.n)

    def to_csv(self, path) -> None:
        header = [f"x{i + 1}" for i in range(self.n + 1)] + ["w"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for x, w in zip(self.nodes, self.weights):
                writer.writerow([repr(float(v)) for v in x] + [repr(float(w))])


def _readonly(*arrays):
    for a in arrays:
        a.setflags(write=False)


@lru_cache(maxsize=64)
def sphere_rule(n: int, degree: int) -> QuadratureRule:
    """Product rule on S^n (any n >= 0) exact through ``degree``.

    S^0 is the pair {-1, +1} with unit weights; S^1 uses the trapezoid rule;
    higher spheres are built by iterating polar angles with Gauss-Jacobi
    rules in cos(theta) for the weight sin^k(theta).
    """
    if n < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {n}")
    degree = max(int(degree), 1)
    if n == 0:
        nodes, weights = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    else:
        n_polar = degree // 2 + 1
        n_azimuth = degree + 1
        count = n_azimuth * n_polar ** (n - 1)
        if count > MAX_NODES:
            raise ResourceError(f"rule on S^{n} of degree {degree} needs {count} nodes > cap {MAX_NODES}")
        phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        weights = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
        for k in range(1, n):
            # lift S^k to S^{k+1}: x = (t, sqrt(1 - t^2) * y), weight (1 - t^2)^{(k-1)/2}
            alpha = (k - 1) / 2.0
            t, wt = roots_jacobi(n_polar, alpha, alpha)
            s = np.sqrt(1.0 - t * t)
            lifted = np.empty((n_polar, len(weights), k + 2))
            lifted[:, :, 0] = t[:, None]
            lifted[:, :, 1:] = s[:, None, None] * nodes[None, :, :]
            nodes = lifted.reshape(-1, k + 2)
            weights = (wt[:, None] * weights[None, :]).ravel()
    _readonly(nodes, weights)
    return QuadratureRule(n=n, nodes=nodes, weights=weights, exactness_degree=degree)


def quadrature_rule(n: int, L: int, degree: int | None = None) -> QuadratureRule:
    """Rule on S^n suited to band limit L (exactness at least 2L + 2).

    ``degree`` raises the exactness further, for integrands that are not
    polynomials (exponentials of band-limited functions).
    """
    if n < 2:
        raise ParameterError(f"quadrature_rule needs n >= 2, got {n}")
    if L < 1:
        raise ParameterError(f"quadrature_rule needs L >= 1, got {L}")
    return sphere_rule(n, max(2 * L + 2, degree or 0))


# ---------------------------------------------------------------------------
# harmonic basis
# ---------------------------------------------------------------------------

def harmonic_space_dim(n: int, k: int) -> int:
    """Dimension of degree-k harmonics on S^n, i.e. of H^k(R^{n+1})."""
    p = n + 1

    def comb(a, b):
        return math.comb(a, b) if a >= b >= 0 else 0

    return comb(k + p - 1, p - 1) - comb(k + p - 3, p - 1)


def degree_offsets(n: int, L: int) -> np.ndarray:
    dims = [harmonic_space_dim(n, k) for k in range(L + 1)]
    return np.concatenate([[0], np.cumsum(dims)]).astype(int)


def basis_size(n: int, L: int) -> int:
    return int(degree_offsets(n, L)[-1])


def coefficient_degrees(n: int, L: int) -> np.ndarray:
    """Degree k of every coefficient slot for band limit L."""
    off = degree_offsets(n, L)
    return np.repeat(np.arange(L + 1), np.diff(off))


@dataclass(frozen=True)
class _DegreeBlock:
    directions: np.ndarray  # (m_k, n + 1)
    mixing: np.ndarray      # (m_k, dim H^k)


@lru_cache(maxsize=None)
def _degree_block(n: int, k: int) -> _DegreeBlock:
    dim = harmonic_space_dim(n, k)
    lam = (n - 1) / 2.0
    rng = np.random.default_rng(1_000_003 * n + k)
    dirs = rng.standard_normal((_BASIS_OVERSAMPLING * dim, n + 1))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rule = sphere_rule(n, max(2 * k, 2))
    z = eval_gegenbauer(k, lam, rule.nodes @ dirs.T)
    u, s, vt = np.linalg.svd(np.sqrt(rule.weights)[:, None] * z, full_matrices=False)
    if s[dim - 1] < 1e-8 * s[0]:
        raise ArithmeticError(f"zonal spanning set for degree {k} on S^{n} is degenerate")
    mixing = vt[:dim].T / s[:dim]
    # fix the SVD sign freedom so the basis is reproducible; degree 0 becomes +1/sqrt(Vol)
    pivot = mixing[np.argmax(np.abs(mixing), axis=0), np.arange(dim)]
    mixing = mixing * np.sign(pivot)
    _readonly(dirs, mixing)
    return _DegreeBlock(directions=dirs, mixing=mixing)


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return pts[None, :] if pts.ndim == 1 else pts


def harmonic_values(n: int, L: int, points) -> np.ndarray:
    """Basis functions of degrees 0..L at points, shape (m, basis_size)."""
    pts = _as_points(points)
    lam = (n - 1) / 2.0
    cols = []
    for k in range(L + 1):
        blk = _degree_block(n, k)
        cols.append(eval_gegenbauer(k, lam, pts @ blk.directions.T) @ blk.mixing)
    return np.concatenate(cols, axis=1)


def harmonic_gradients(n: int, L: int, points) -> np.ndarray:
    """Tangential gradients of the basis, shape (m, basis_size, n + 1)."""
    pts = _as_points(points)
    lam = (n - 1) / 2.0
    blocks = []
    for k in range(L + 1):
        blk = _degree_block(n, k)
        if k == 0:
            blocks.append(np.zeros((len(pts), 1, n + 1)))
            continue
        t = pts @ blk.directions.T
        # d/dt C_k^lam(t) = 2 lam C_{k-1}^{lam+1}(t)
        dg = 2.0 * lam * eval_gegenbauer(k - 1, lam + 1.0, t)
        amb = np.stack([dg @ (blk.mixing * blk.directions[:, a:a + 1]) for a in range(n + 1)], axis=2)
        radial = np.einsum("mja,ma->mj", amb, pts)
        blocks.append(amb - radial[:, :, None] * pts[:, None, :])
    return np.concatenate(blocks, axis=1)


def _function_gradient(n: int, L: int, coeffs: np.ndarray, points) -> np.ndarray:
    pts = _as_points(points)
    lam = (n - 1) / 2.0
    off = degree_offsets(n, L)
    amb = np.zeros_like(pts)
    for k in range(1, L + 1):
        blk = _degree_block(n, k)
        w = blk.mixing @ coeffs[off[k]:off[k + 1]]
        dg = 2.0 * lam * eval_gegenbauer(k - 1, lam + 1.0, pts @ blk.directions.T)
        amb += (dg * w) @ blk.directions
    return amb - np.einsum("ma,ma->m", amb, pts)[:, None] * pts


@dataclass(frozen=True)
class SphereGrid:
    """A quadrature rule with the harmonic basis tabulated on its nodes."""

    rule: QuadratureRule
    L: int
    values: np.ndarray
    gradients: np.ndarray
    eigenvalues: np.ndarray  # Laplace eigenvalue of each coefficient slot

    @property
    def n(self) -> int:
        return self.rule.n


@lru_cache(maxsize=32)
def sphere_grid(n: int, L: int, degree: int | None = None) -> SphereGrid:
    rule = quadrature_rule(n, L, degree)
    deg = coefficient_degrees(n, L)
    vals = harmonic_values(n, L, rule.nodes)
    grads = harmonic_gradients(n, L, rule.nodes)
    eig = (deg * (deg + n - 1)).astype(float)
    _readonly(vals, grads, eig)
    return SphereGrid(rule=rule, L=L, values=vals, gradients=grads, eigenvalues=eig)


# ---------------------------------------------------------------------------
# band-limited functions
# ---------------------------------------------------------------------------

@dataclass
class BandlimitedFunction:
    """Real function on S^n given by harmonic coefficients up to degree L."""

    n: int
    L: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (basis_size(self.n, self.L),):
            raise ParameterError(
                f"expected {basis_size(self.n, self.L)} coefficients for n={self.n}, L={self.L}, "
                f"got shape {self.coeffs.shape}")

    @classmethod
    def zeros(cls, n: int, L: int) -> "BandlimitedFunction":
        return cls(n, L, np.zeros(basis_size(n, L)))

    @classmethod
    def constant(cls, n: int, L: int, value: float) -> "BandlimitedFunction":
        f = cls.zeros(n, L)
        f.coeffs[0] = value * math.sqrt(sphere_volume(n))
        return f

    @classmethod
    def random(cls, n: int, L: int, rng: np.random.Generator, scale: float = 1.0,
               min_degree: int = 0) -> "BandlimitedFunction":
        """Gaussian coefficients with root-mean-square value ``scale`` on S^n."""
        c = rng.standard_normal(basis_size(n, L))
        c[coefficient_degrees(n, L) < min_degree] = 0.0
        norm = np.linalg.norm(c)
        if norm > 0:
            c *= scale * math.sqrt(sphere_volume(n)) / norm
        return cls(n, L, c)

    @property
    def degrees(self) -> np.ndarray:
        return coefficient_degrees(self.n, self.L)

    def block(self, k: int) -> np.ndarray:
        off = degree_offsets(self.n, self.L)
        return self.coeffs[off[k]:off[k + 1]]

    def degree_energy(self) -> np.ndarray:
        """Squared L2 norm (surface measure) of each degree component."""
        return np.bincount(self.degrees, weights=self.coeffs ** 2, minlength=self.L + 1)

    def with_band(self, L: int) -> "BandlimitedFunction":
        """Zero-pad or truncate to band limit L."""
        out = BandlimitedFunction.zeros(self.n, L)
        m = min(len(out.coeffs), len(self.coeffs))
        out.coeffs[:m] = self.coeffs[:m]
        return out

    def mean(self) -> float:
        return float(self.coeffs[0] / math.sqrt(sphere_volume(self.n)))

    def __call__(self, points) -> np.ndarray:
        return synthesize(self, points)

    def __add__(self, other):
        if isinstance(other, BandlimitedFunction):
            if (other.n, other.L) != (self.n, self.L):
                raise ParameterError("band-limited functions must share n and L")
            return BandlimitedFunction(self.n, self.L, self.coeffs + other.coeffs)
        return self + BandlimitedFunction.constant(self.n, self.L, float(other))

    __radd__ = __add__

    def __mul__(self, scalar):
        return BandlimitedFunction(self.n, self.L, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)


def analyze(values, rule: QuadratureRule, L: int, strict: bool = True,
            tol: float = 1e-10) -> BandlimitedFunction:
    """Harmonic coefficients of a function sampled on the rule's nodes.

    With ``strict`` the function must be band-limited: if resynthesis misses
    the samples by more than ``tol`` (relative RMS) an AliasingError is raised.
    """
    if rule.exactness_degree < 2 * L:
        raise ParameterError(f"rule exactness {rule.exactness_degree} < 2L = {2 * L}")
    f = np.asarray(values, dtype=float)
    y = harmonic_values(rule.n, L, rule.nodes)
    coeffs = y.T @ (rule.weights * f)
    out = BandlimitedFunction(rule.n, L, coeffs)
    if strict:
        resid = f - y @ coeffs
        scale = math.sqrt(max(rule.integrate(f * f), 1e-300))
        err = math.sqrt(max(rule.integrate(resid * resid), 0.0))
        if err > tol * scale and err > 1e-14:
            raise AliasingError(f"relative energy beyond band {L}: {err / scale:.3e}")
    return out


def aliasing_energy(values, rule: QuadratureRule, L: int) -> float:
    """Relative L2 norm of the part of the samples not captured below band L."""
    f = np.asarray(values, dtype=float)
    c = analyze(f, rule, L, strict=False).coeffs
    resid = f - harmonic_values(rule.n, L, rule.nodes) @ c
    scale = math.sqrt(max(rule.integrate(f * f), 1e-300))
    return math.sqrt(max(rule.integrate(resid * resid), 0.0)) / scale


def synthesize(c: BandlimitedFunction, points) -> np.ndarray:
    """Values of a band-limited function at unit vectors."""
    return harmonic_values(c.n, c.L, points) @ c.coeffs


def gradient(c: BandlimitedFunction, points) -> np.ndarray:
    """Tangential gradient at unit vectors, shape (m, n + 1)."""
    return _function_gradient(c.n, c.L, c.coeffs, points)


def spectral_multiplier(op_kind: str, n: int, L: int, **params) -> np.ndarray:
    """Per-degree eigenvalues of a diagonal model operator, degrees 0..L."""
    from . import model_spectra as ms

    kind = op_kind.replace("-", "_")
    if kind in ("laplacian", "laplace"):
        vals = [ms.laplace_eigenvalue(n, k) for k in range(L + 1)]
    elif kind == "yamabe":
        vals = [ms.yamabe_eigenvalue(n, k) for k in range(L + 1)]
    elif kind == "gjms":
        vals = [ms.gjms_eigenvalue(n, params["r"], k) for k in range(L + 1)]
    elif kind == "knapp_stein":
        vals = [ms.knapp_stein_gamma(n, params["p"], k) for k in range(L + 1)]
    else:
        raise ParameterError(f"unknown operator kind {op_kind!r}")
    return np.array([float(v) for v in vals])


def spectral_apply(op_kind: str, c: BandlimitedFunction, **params) -> BandlimitedFunction:
    """Apply a diagonal operator by multiplying each degree block by its eigenvalue."""
    mult = spectral_multiplier(op_kind, c.n, c.L, **params)
    return BandlimitedFunction(c.n, c.L, c.coeffs * mult[c.degrees])


# ---------------------------------------------------------------------------
# conformal group
# ---------------------------------------------------------------------------

def _signature(n: int) -> np.ndarray:
    return np.diag([1.0] * (n + 1) + [-1.0])


@dataclass(frozen=True)
class ConformalMap:
    """Element of O(n+1, 1) acting on S^n by linear fractional maps."""

    matrix: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.matrix, dtype=float)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 3:
            raise ParameterError(f"ConformalMap needs a square (n+2)x(n+2) matrix, got {h.shape}")
        J = _signature(h.shape[0] - 2)
        if np.abs(h.T @ J @ h - J).max() > 1e-12 * max(1.0, np.abs(h).max() ** 2):
            raise ParameterError("matrix does not preserve the Lorentz form")
        object.__setattr__(self, "matrix", h)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 2

    def __matmul__(self, other: "ConformalMap") -> "ConformalMap":
        return ConformalMap(self.matrix @ other.matrix)

    @classmethod
    def identity(cls, n: int) -> "ConformalMap":
        return cls(np.eye(n + 2))

    @classmethod
    def boost(cls, n: int, axis: int, rapidity: float) -> "ConformalMap":
        h = np.eye(n + 2)
        ch, sh = math.cosh(rapidity), math.sinh(rapidity)
        h[axis, axis] = h[n + 1, n + 1] = ch
        h[axis, n + 1] = h[n + 1, axis] = sh
        return cls(h)

    @classmethod
    def rotation(cls, rot: np.ndarray) -> "ConformalMap":
        rot = np.asarray(rot, dtype=float)
        h = np.eye(rot.shape[0] + 1)
        h[:-1, :-1] = rot
        return cls(h)


def mobius_action(h: ConformalMap, y):
    """Image of points under h and the conformal factor Omega > 0.

    ``h . y = h(y, 1) / h(y, 1)_{n+2}`` and ``Omega = 1 / h(y, 1)_{n+2}``, so
    that the pullback of the round metric is ``Omega^2`` times the round
    metric.
    """
    pts = np.asarray(y, dtype=float)
    single = pts.ndim == 1
    pts = _as_points(pts)
    lifted = np.concatenate([pts, np.ones((len(pts), 1))], axis=1) @ h.matrix.T
    denom = lifted[:, -1]
    if np.any(denom <= 0):
        raise DomainError("h maps a point off the positive sheet (h(y,1)_{n+2} <= 0)")
    image = lifted[:, :-1] / denom[:, None]
    omega = 1.0 / denom
    if single:
        return image[0], float(omega[0])
    return image, omega


def _tangent_frame(y: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent space at y, as columns."""
    q, _ = np.linalg.qr(np.column_stack([y, np.eye(len(y))]))
    return q[:, 1:]


def pullback_defect(h: ConformalMap, y, step: float = 1e-5) -> float:
    """max |phi^* g - Omega^2 g| at y, from a central-difference Jacobian."""
    y = np.asarray(y, dtype=float)
    E = _tangent_frame(y)
    _, omega = mobius_action(h, y)
    cols = []
    for j in range(E.shape[1]):
        fwd, _ = mobius_action(h, y + step * E[:, j])
        bwd, _ = mobius_action(h, y - step * E[:, j])
        cols.append((fwd - bwd) / (2 * step))
    dphi = np.column_stack(cols)
    return float(np.abs(dphi.T @ dphi - omega ** 2 * np.eye(E.shape[1])).max())


@dataclass(frozen=True)
class ConformalVectorField:
    """Infinitesimal generator of O(n+1, 1) acting on S^n.

    ``rotation`` (i, j): X(y) = y_i e_j - y_j e_i, a Killing field.
    ``boost`` (i,):      X(y) = e_i - y_i y, the gradient of the coordinate y_i.
    """

    n: int
    kind: str
    indices: tuple

    @property
    def label(self) -> str:
        return f"{self.kind}{self.indices}"

    def __call__(self, points) -> np.ndarray:
        pts = _as_points(points)
        out = np.zeros_like(pts)
        if self.kind == "rotation":
            i, j = self.indices
            out[:, j] += pts[:, i]
            out[:, i] -= pts[:, j]
        else:
            (i,) = self.indices
            out[:, i] += 1.0
            out -= pts[:, i:i + 1] * pts
        return out

    def jacobian(self, points) -> np.ndarray:
        """Ambient derivative dX_a/dy_b of the polynomial extension."""
        pts = _as_points(points)
        m, d = pts.shape
        jac = np.zeros((m, d, d))
        if self.kind == "rotation":
            i, j = self.indices
            jac[:, j, i] = 1.0
            jac[:, i, j] = -1.0
        else:
            (i,) = self.indices
            jac -= pts[:, :, None] * np.eye(d)[i][None, None, :]
            jac -= pts[:, i][:, None, None] * np.eye(d)[None]
        return jac

    def divergence(self, points) -> np.ndarray:
        pts = _as_points(points)
        if self.kind == "rotation":
            return np.zeros(len(pts))
        return -self.n * pts[:, self.indices[0]]

    def conformal_factor(self, points) -> np.ndarray:
        """omega_X with L_X g = 2 omega_X g, equal to div X / n."""
        return self.divergence(points) / self.n

    def flow(self, t: float) -> ConformalMap:
        """Group element exp(tX)."""
        if self.kind == "boost":
            return ConformalMap.boost(self.n, self.indices[0], t)
        i, j = self.indices
        rot = np.eye(self.n + 1)
        c, s = math.cos(t), math.sin(t)
        rot[i, i] = rot[j, j] = c
        rot[j, i], rot[i, j] = s, -s
        return ConformalMap.rotation(rot)


def conformal_vector_fields(n: int) -> list[ConformalVectorField]:
    """Basis of the conformal Lie algebra so(n+1, 1) as vector fields on S^n."""
    if n < 2:
        raise ParameterError(f"conformal_vector_fields needs n >= 2, got {n}")
    fields = [ConformalVectorField(n, "rotation", (i, j))
              for i in range(n + 1) for j in range(i + 1, n + 1)]
    fields += [ConformalVectorField(n, "boost", (i,)) for i in range(n + 1)]
    return fields


def killing_defect(X: ConformalVectorField, points, step: float = 1e-5) -> float:
    """max |L_X g - 2 omega_X g| over points, Jacobian by central differences."""
    pts = _as_points(points)
    worst = 0.0
    omega = X.conformal_factor(pts)
    for y, om in zip(pts, omega):
        E = _tangent_frame(y)
        cols = [(X(y + step * E[:, j])[0] - X(y - step * E[:, j])[0]) / (2 * step)
                for j in range(E.shape[1])]
        dX = np.column_stack(cols)  # derivative along tangent directions
        lie = E.T @ dX + dX.T @ E
        worst = max(worst, float(np.abs(lie - 2 * om * np.eye(E.shape[1])).max()))
    return worst


def directional_derivative(f: BandlimitedFunction, X: Callable, points) -> np.ndarray:
    """X(f) at points."""
    pts = _as_points(points)
    return np.einsum("ma,ma->m", gradient(f, pts), X(pts))


def random_unit_vectors(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((m, n + 1))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
