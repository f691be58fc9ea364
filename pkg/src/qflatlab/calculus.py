"""Iterated Laplacians, curvature extraction, Pizzetti means, ball means.

Radial fields get an exact-structure path: with phi(rho) = q(rho^2) the
Laplacian acts on the even part as

    (Delta phi)(s) = 2 n q'(s) + 4 s q''(s),        s = rho^2,

which is a polynomial-to-polynomial operation on a local fit of q.  One
Chebyshev least-squares fit therefore yields all m iterated Laplacians by
exact coefficient algebra, avoiding the noise amplification of composed
difference stencils.  The full-dimensional finite-difference path composes
the standard (2n+1)-point second-order stencil on the integer lattice with
exact combined weights.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constants import sphere_constants
from .errors import (DimensionError, NotRadialError, QflatError,
                     QuadratureError, RangeOverflowError)
from .fields import Dimension, ScalarField, as_dimension, check_point
from .polynomials import (Polynomial, apply_laplacian_poly, ball_mean_poly,
                          radial_monomial)
from .quadrature import (ball_integral_generic, circle_integral,
                         integrate_radial, offset_ball_integral_radial)

# ---------------------------------------------------------------------------
# local Chebyshev fits
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _cheb_design(n_nodes, degree):
    tau = np.cos(np.pi * np.arange(n_nodes) / (n_nodes - 1))
    vander = np.polynomial.chebyshev.chebvander(tau, degree)
    pinv = np.linalg.pinv(vander)
    return tau, pinv


@lru_cache(maxsize=None)
def _cheb_to_power(degree):
    mat = np.zeros((degree + 1, degree + 1))
    for k in range(degree + 1):
        e = np.zeros(k + 1)
        e[k] = 1.0
        col = np.polynomial.chebyshev.cheb2poly(e)
        mat[:len(col), k] = col
    return mat


def _fit_power_coeffs(values, degree):
    """Least-squares polynomial fit on Chebyshev nodes; power-basis coeffs.

    values has shape (m, n_nodes); returns (m, degree+1).
    """
    n_nodes = values.shape[1]
    _, pinv = _cheb_design(n_nodes, degree)
    cheb = values @ pinv.T
    return cheb @ _cheb_to_power(degree).T


def chebfit_derivatives(phi, r, max_order=2, rel_window=0.05):
    """Derivatives phi^(k)(r), k = 0..max_order, via a local fit.

    The window scales with (1 + r) and is shifted to keep all nodes at
    nonnegative radii.
    """
    degree = max_order + 8
    n_nodes = degree + 6
    h = max(1e-6, rel_window * (1.0 + r))
    center = max(r, h)
    tau, _ = _cheb_design(n_nodes, degree)
    nodes = center + h * tau
    vals = np.asarray(phi(nodes), dtype=float)[None, :]
    coeffs = _fit_power_coeffs(vals, degree)[0]
    y0 = (r - center) / h
    out = []
    c = coeffs
    h_pow = 1.0
    for _ in range(max_order + 1):
        out.append(float(np.polynomial.polynomial.polyval(y0, c)) / h_pow)
        c = np.polynomial.polynomial.polyder(c)
        h_pow *= h
    return out


# ---------------------------------------------------------------------------
# batched radial Laplacians through the s = r^2 substitution
# ---------------------------------------------------------------------------

_POLY_DEG_EXTRA = 8


@dataclass
class RadialJet:
    """Local even-part fits q with phi(r) = q(r^2) at a batch of radii.

    Exposes iterated Laplacians and first radial derivatives, all derived
    from one fit per point.
    """

    r: np.ndarray
    s_mid: np.ndarray
    delta: np.ndarray
    coeffs: np.ndarray   # (m, K) power-basis coefficients in y = (s - s_mid)/delta
    dim: int

    @property
    def y0(self):
        return (self.r ** 2 - self.s_mid) / self.delta

    def _polyval(self, coeffs):
        y = self.y0
        out = np.zeros_like(y)
        for c in coeffs[:, ::-1].T:
            out = out * y + c
        return out

    def q_derivative(self, order=1):
        """d^order q / ds^order evaluated at the batch points."""
        c = self.coeffs
        for _ in range(order):
            c = _poly_der(c)
        return self._polyval(c) / self.delta ** order

    def value(self):
        return self._polyval(self.coeffs)

    def radial_derivative(self):
        """phi'(r) = 2 r q'(s)."""
        return 2.0 * self.r * self.q_derivative(1)

    def laplacian_coeffs(self, coeffs):
        """Coefficient-level Delta on a local even-part polynomial."""
        n = self.dim
        d1 = _poly_der(coeffs)
        d2 = _poly_der(d1)
        shifted = np.zeros_like(coeffs)
        shifted[:, 1:d2.shape[1] + 1] = d2
        out = np.zeros_like(coeffs)
        out[:, :d1.shape[1]] += (2.0 * n / self.delta)[:, None] * d1
        out[:, :d2.shape[1]] += (4.0 * self.s_mid / self.delta ** 2)[:, None] * d2
        out += (4.0 / self.delta)[:, None] * shifted
        return out

    def laplacian_power(self, m):
        c = self.coeffs
        for _ in range(m):
            c = self.laplacian_coeffs(c)
        return self._polyval(c)


def _poly_der(coeffs):
    k = np.arange(1, coeffs.shape[1])
    return coeffs[:, 1:] * k[None, :]


def radial_jet(phi, r, dim, max_m=1, rel_window=0.05):
    """Fit local even-part polynomials of phi around each radius in r."""
    n = int(dim)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    degree = 2 * max_m + _POLY_DEG_EXTRA
    n_nodes = degree + 6
    tau, _ = _cheb_design(n_nodes, degree)
    s0 = r * r
    # upper clamp keeps delta**2 representable at astronomical radii
    delta = np.clip(rel_window * (1.0 + s0), 1e-8, 1e150)
    s_mid = np.maximum(s0, delta)
    s_nodes = s_mid[:, None] + delta[:, None] * tau[None, :]
    rho = np.sqrt(np.maximum(s_nodes, 0.0))
    vals = np.asarray(phi(rho.ravel()), dtype=float).reshape(rho.shape)
    coeffs = _fit_power_coeffs(vals, degree)
    return RadialJet(r=r, s_mid=s_mid, delta=delta, coeffs=coeffs, dim=n)


def radial_laplacian_batch(phi, r, dim, m=1, rel_window=0.05):
    """Delta^m of the radial function phi(|x|) at a batch of radii."""
    return radial_jet(phi, r, dim, max_m=m, rel_window=rel_window).laplacian_power(m)


# ---------------------------------------------------------------------------
# full-dimensional finite differences
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _fd_lattice_weights(n, m):
    """Exact weights of the m-fold composed (2n+1)-point Laplacian stencil."""
    weights = {(0,) * n: 1.0}
    for _ in range(m):
        nxt = {}
        for off, w in weights.items():
            nxt[off] = nxt.get(off, 0.0) - 2.0 * n * w
            for i in range(n):
                for s in (1, -1):
                    off2 = off[:i] + (off[i] + s,) + off[i + 1:]
                    nxt[off2] = nxt.get(off2, 0.0) + w
        weights = nxt
    offs = np.array(sorted(nxt for nxt in weights), dtype=float)
    w = np.array([weights[tuple(int(v) for v in o)] for o in offs])
    return offs, w


def default_fd_step(x):
    return max(1e-2, 1e-2 * (1.0 + float(np.linalg.norm(x))))


def fd_laplacian_power(f, x, m, h=None):
    x = np.asarray(x, dtype=float)
    n = x.size
    if h is None:
        h = default_fd_step(x)
    if h <= 0 or np.max(np.abs(x)) + h == np.max(np.abs(x)):
        raise RangeOverflowError(f"finite-difference step h={h} underflows at |x|={np.max(np.abs(x))}")
    offs, w = _fd_lattice_weights(n, m)
    pts = x[None, :] + h * offs
    vals = np.asarray(f(pts), dtype=float)
    return float(np.dot(w, vals)) / h ** (2 * m)


# ---------------------------------------------------------------------------
# laplacian_power and curvature
# ---------------------------------------------------------------------------

def laplacian_power(f: ScalarField, x, m: int, method: str = "auto", h=None) -> float:
    """Delta^m f at x.

    method: "analytic" uses the field's closed-form chain; "radial" the
    even-part fit (requires a radial field); "finite_difference" the
    composed stencil with step h (default 1e-2 * (1 + |x|)); "auto" picks
    the best available in that order.
    """
    if m < 1:
        raise QflatError(f"laplacian order must be >= 1, got {m}")
    x = check_point(x, f.dim)
    chain = f.caps.laplacian_chain
    if method == "auto":
        if chain is not None and len(chain) >= m:
            method = "analytic"
        elif f.caps.is_radial:
            method = "radial"
        else:
            method = "finite_difference"
    if method == "analytic":
        if chain is None or len(chain) < m:
            raise QflatError(
                f"field {f.name or '<anonymous>'} has no analytic Laplacian chain of order {m}")
        return float(np.asarray(chain[m - 1](x[None, :]))[0])
    if method == "radial":
        if not f.caps.is_radial:
            raise NotRadialError("radial Laplacian requested for a non-radial field")
        return float(radial_laplacian_batch(f.along_ray(), np.linalg.norm(x), f.dim.n, m)[0])
    if method == "finite_difference":
        return fd_laplacian_power(f, x, m, h=h)
    raise QflatError(f"unknown laplacian method {method!r}")


def polyharmonic_density(u: ScalarField, x, method="auto") -> float:
    """(-Delta)^{n/2} u at x; equals Q_g e^{n u} for the metric e^{2u}|dx|^2."""
    m = u.dim.n // 2
    return (-1.0) ** m * laplacian_power(u, x, m, method=method)


def q_curvature(u: ScalarField, x, method: str = "auto") -> float:
    """Q_g(x) = e^{-n u} (-Delta)^{n/2} u for g = e^{2u}|dx|^2."""
    x = check_point(x, u.dim)
    n = u.dim.n
    ux = u(x)
    if -n * ux > 709.0:
        raise RangeOverflowError(
            f"e^(-n u) overflows at x={x} (n*u = {n * ux:.3g})")
    return math.exp(-n * ux) * polyharmonic_density(u, x, method=method)


def gradient(f: ScalarField, x, h=None):
    x = check_point(x, f.dim)
    if f.caps.gradient is not None:
        return np.asarray(f.caps.gradient(x[None, :]), dtype=float)[0]
    if f.caps.is_radial:
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return np.zeros(f.dim.n)
        jet = radial_jet(f.along_ray(), np.array([r]), f.dim.n)
        return float(jet.radial_derivative()[0]) * x / r
    if h is None:
        h = default_fd_step(x)
    n = f.dim.n
    pts = np.repeat(x[None, :], 2 * n, axis=0)
    for i in range(n):
        pts[2 * i, i] += h
        pts[2 * i + 1, i] -= h
    vals = f(pts)
    return (vals[0::2] - vals[1::2]) / (2.0 * h)


def scalar_curvature(u: ScalarField, x, method: str = "auto") -> float:
    """R_g = 2(n-1) e^{-2u} (-Delta u - (n-2)/2 |grad u|^2), for n >= 4."""
    n = u.dim.n
    if n < 4:
        raise DimensionError(
            "scalar curvature is used for n >= 4 only; for n = 2 the "
            "Gaussian curvature is q_curvature")
    x = check_point(x, u.dim)
    ux = u(x)
    if -2.0 * ux > 709.0:
        raise RangeOverflowError(f"e^(-2u) overflows at x={x}")
    lap = laplacian_power(u, x, 1, method=method)
    g = gradient(u, x)
    return 2.0 * (n - 1) * math.exp(-2.0 * ux) * (-lap - 0.5 * (n - 2) * float(g @ g))


@dataclass(frozen=True)
class CurvatureReport:
    point: tuple
    q_value: float
    scalar_value: float | None

    def to_json_dict(self):
        return {
            "point": list(self.point),
            "q_value": self.q_value,
            "scalar_value": self.scalar_value,
        }


def curvature_report(u: ScalarField, x) -> CurvatureReport:
    x = check_point(x, u.dim)
    q = q_curvature(u, x)
    s = scalar_curvature(u, x) if u.dim.n >= 4 else None
    return CurvatureReport(point=tuple(float(v) for v in x), q_value=q, scalar_value=s)


# ---------------------------------------------------------------------------
# Pizzetti expansion of ball means
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PizzettiCoefficients:
    """Coefficients c_i of the ball-mean expansion

        mean_{B_R(x)} h = sum_{i<m} c_i R^{2i} (Delta^i h)(x)

    exact whenever Delta^m h = 0."""

    dim: Dimension
    order: int
    c: tuple

    def mean(self, laplacian_values, R):
        """Assemble the expansion from [h(x), (Delta h)(x), ...]."""
        return sum(ci * R ** (2 * i) * v
                   for i, (ci, v) in enumerate(zip(self.c, laplacian_values)))


@lru_cache(maxsize=None)
def pizzetti_coeffs(dim, m: int) -> PizzettiCoefficients:
    """Derive the coefficients by solving against |y - x|^{2i}.

    Exact radial integrals give mean_{B_1} |z|^{2i} = n/(n+2i); the
    iterated Laplacians of |z|^{2i} at the center are exact coefficient
    computations, so the linear solve is self-verifying.
    """
    dim = as_dimension(dim)
    if m < 1:
        raise QflatError(f"Pizzetti order must be >= 1, got {m}")
    n = dim.n
    origin = np.zeros(n)
    a = np.zeros((m, m))
    b = np.zeros(m)
    for i in range(m):
        p = radial_monomial(dim, i)
        b[i] = ball_mean_poly(p, origin, 1.0)
        for j in range(m):
            a[i, j] = apply_laplacian_poly(p, j)(origin) if j > 0 else p(origin)
    c = np.linalg.solve(a, b)
    if abs(c[0] - 1.0) > 1e-12 or np.any(c <= 0):
        raise QflatError(f"Pizzetti solve produced invalid coefficients {c}")
    c[0] = 1.0
    return PizzettiCoefficients(dim=dim, order=m, c=tuple(float(v) for v in c))


def pizzetti_check(p: Polynomial, center, R) -> float:
    """|mean_{B_R(center)} p  -  Pizzetti expansion| for a polyharmonic p."""
    center = np.asarray(center, dtype=float)
    laps = [p]
    while laps[-1].coeffs:
        laps.append(apply_laplacian_poly(laps[-1], 1))
    m = len(laps) - 1  # Delta^m p = 0
    m = max(m, 1)
    coeffs = pizzetti_coeffs(p.dim, m)
    lhs = ball_mean_poly(p, center, R)
    rhs = coeffs.mean([q(center) for q in laps[:m]], R)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# ball means of fields
# ---------------------------------------------------------------------------

def ball_mean(f, center, R, rel_tol=1e-8) -> float:
    """Mean of f over B_R(center).

    Polynomials are averaged exactly; radial fields via 1-D reductions
    (center at the origin or offset); general n = 2 fields by adaptive
    polar quadrature; higher-dimensional general fields by a refined
    product rule (raises QuadratureError if refinement stalls).
    """
    if R <= 0:
        raise QflatError(f"ball radius must be positive, got {R}")
    if isinstance(f, Polynomial):
        return ball_mean_poly(f, center, R)
    n = f.dim.n
    center = check_point(center, f.dim)
    vol = sphere_constants(n).unit_ball_volume * R ** n
    c_norm = float(np.linalg.norm(center))
    if f.caps.is_radial:
        phi = f.along_ray()
        bps = (f.caps.support_radius,) if f.caps.support_radius else ()
        val = offset_ball_integral_radial(phi, n, c_norm, R, rel_tol=rel_tol,
                                          breakpoints=bps)
        return val / vol
    if n == 2:
        def shell(t):
            t = np.atleast_1d(t)
            return circle_integral(f, center, t, rel_tol=rel_tol / 10)

        # absolute floor keeps identically-vanishing means convergent
        return integrate_radial(shell, 0.0, R, rel_tol=rel_tol, abs_tol=1e-12) / vol
    val, err = ball_integral_generic(f, n, R, center=center)
    if err > max(rel_tol, 1e-5) * 50:
        raise QuadratureError(
            f"ball mean in dimension {n} did not stabilize (relative change {err:.2e}); "
            "only radial integrands support tight tolerances here")
    return val / vol
