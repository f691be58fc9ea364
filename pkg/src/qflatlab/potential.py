"""Logarithmic potentials of integrable densities.

The potential of a density f is

    L(f)(x) = g_n * integral of log(|y| / |x - y|) f(y) dy,
    g_n = 2 / ((n-1)! |S^n|),

the renormalized convolution against the fundamental solution of the
polyharmonic Laplacian (-Delta)^{n/2}, normalized so that L(f)(0) = 0.

Radial densities reduce to one dimension through the angular kernel

    k_n(r, s) = spherical mean of log|r e_1 - s w| over unit vectors w,

for which every even dimension has a closed form:

    k_n(r, s) = log M + sum_{j=1..(n-2)/2} (-1)^{j+1} (m/M)^{2j} / (2j)
                                          * C(n-2, (n-2)/2 - j) / C(n-2, (n-2)/2)

with M = max(r, s), m = min(r, s).  (Expand log|e_1 - t w| in cos(k theta)
Fourier modes and integrate against the finite cosine expansion of
sin^{n-2} theta; only modes k = 2, 4, ..., n-2 survive.)  For n = 2 the sum
is empty and k_2 = log max(r, s), the mean-value property of log.
"""


import json
import math
from dataclasses import dataclass

import numpy as np

from .constants import sphere_constants
from .errors import NonIntegrableError, QflatError
from .fields import RadialProfile, ScalarField
from .fitting import fit_linear_logx, require_window
from .quadrature import (circle_integral, decade_mass_integral,
                         integrate_radial, offset_ball_integral_radial,
                         sphere_rule)

KERNEL_MAGIC = b"QFLK1\n"


def angular_log_kernel(dim, r, s):
    """Spherical mean of log|r e_1 - s w|; exact closed form, vectorized.

    Symmetric in (r, s); (0, 0) is outside the domain.
    """
    n = int(dim)
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    scalar = r.ndim == 0 and s.ndim == 0
    r, s = np.broadcast_arrays(np.atleast_1d(r), np.atleast_1d(s))
    if np.any((r == 0) & (s == 0)):
        raise QflatError("angular kernel undefined at r = s = 0")
    big = np.maximum(r, s)
    small = np.minimum(r, s)
    t2 = (small / big) ** 2
    out = np.log(big)
    lam = (n - 2) // 2
    for j in range(1, lam + 1):
        out = out + (-1.0) ** (j + 1) * t2 ** j / (2 * j) \
            * math.comb(2 * lam, lam - j) / math.comb(2 * lam, lam)
    return float(out[0]) if scalar else out


def angular_log_kernel_quadrature(dim, r, s, order=64):
    """Gauss-Legendre reference for the angular kernel (polar angle with
    sin^{n-2} weight).  Loses accuracy near r = s, where the integrand has
    a logarithmic singularity; kept as a cross-check, not the main path."""
    n = int(dim)
    x, w = np.polynomial.legendre.leggauss(order)
    th = 0.5 * (x + 1.0) * np.pi
    wt = w * 0.5 * np.pi * np.sin(th) ** (n - 2)
    norm = np.sum(wt)
    d2 = r * r + s * s - 2.0 * r * s * np.cos(th)
    return float(np.sum(wt * 0.5 * np.log(np.maximum(d2, 1e-300))) / norm)


# ---------------------------------------------------------------------------
# cached kernel table with binary persistence
# ---------------------------------------------------------------------------

@dataclass
class KernelTable:
    """k_n sampled on a geometric (r, s) grid; symmetric by construction."""

    dim: int
    r_nodes: np.ndarray
    values: np.ndarray
    tol: float

    @classmethod
    def build(cls, dim, r_min=1e-3, r_max=1e3, per_decade=8, tol=1e-10):
        n = int(dim)
        count = int(round(math.log10(r_max / r_min) * per_decade)) + 1
        nodes = np.geomspace(r_min, r_max, count)
        values = angular_log_kernel(n, nodes[:, None], nodes[None, :])
        return cls(dim=n, r_nodes=nodes, values=values, tol=tol)

    def header(self):
        return {
            "n": self.dim,
            "r_min": float(self.r_nodes[0]),
            "r_max": float(self.r_nodes[-1]),
            "count": int(self.r_nodes.size),
            "tol": self.tol,
        }

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(KERNEL_MAGIC)
            fh.write((json.dumps(self.header(), sort_keys=True) + "\n").encode())
            fh.write(self.r_nodes.astype("<f8").tobytes())
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            blob = fh.read()
        if not blob.startswith(KERNEL_MAGIC):
            raise QflatError(f"{path}: not a kernel cache file")
        nl = blob.index(b"\n", len(KERNEL_MAGIC))
        header = json.loads(blob[len(KERNEL_MAGIC):nl].decode("utf-8"))
        offset = nl + 1
        count = int(header["count"])
        nodes = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        values = np.frombuffer(blob, dtype="<f8", count=count * count,
                               offset=offset + 8 * count).reshape(count, count)
        table = cls(dim=int(header["n"]), r_nodes=nodes.copy(),
                    values=values.copy(), tol=float(header["tol"]))
        got = table.header()
        for key in ("n", "r_min", "r_max", "count"):
            if not np.isclose(got[key], header[key], rtol=0, atol=0):
                raise QflatError(f"{path}: header field {key} does not match payload")
        sym = np.max(np.abs(table.values - table.values.T))
        if sym > table.tol:
            raise QflatError(f"{path}: kernel table asymmetric by {sym:.2e}")
        return table


# ---------------------------------------------------------------------------
# the evaluator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaEstimate:
    """Normalized total mass g_n * integral(f), or its asymptote-fit twin."""

    alpha_hat: float
    window: tuple
    residual: float
    method: str

    def to_json_dict(self):
        return {"alpha_hat": self.alpha_hat, "window": list(self.window),
                "residual": self.residual, "method": self.method}


class PotentialEvaluator:
    """Configured quadrature engine for the potential of one density.

    Radial densities use the exact kernel reduction

        L(f)(x) = g_n |S^{n-1}| * integral over s of
                  (log s - k_n(|x|, s)) f(s) s^{n-1} ds;

    for n = 2 the integrand vanishes identically for s > |x|.  General
    densities are split around the singularity: the ball B_eps(x) with
    eps = min(1, 1/(1+|x|)) gets the subtraction
    f(x) * integral_{B_eps} log(1/|z|) dz plus a smooth remainder, the rest
    is adaptive polar quadrature around x.
    """

    def __init__(self, f: ScalarField, rel_tol=1e-8, max_refinement=4096,
                 sphere_resolution=24, breakpoints=()):
        self.f = f
        self.dim = f.dim
        self.n = f.dim.n
        self.rel_tol = rel_tol
        self.max_refinement = max_refinement
        self.sphere_resolution = sphere_resolution
        self.breakpoints = tuple(sorted(breakpoints))  # known kinks of f(|y|)
        self.gconst = sphere_constants(self.n).green_constant
        self.area = sphere_constants(self.n).boundary_area
        self._phi = f.along_ray() if f.caps.is_radial else None
        self._log_moment_cache = None
        self._mass_cache = None
        self._table = None

    # -- mass -------------------------------------------------------------

    def mass(self):
        """integral of f over R^n (signed), with tail extrapolation."""
        if self._mass_cache is None:
            supp = self.f.caps.support_radius
            if self._phi is not None:
                g = lambda s: np.asarray(self._phi(s), dtype=float) * self.area * s ** (self.n - 1)
                res = decade_mass_integral(g, rel_tol=self.rel_tol,
                                           support_radius=supp,
                                           breakpoints=self.breakpoints)
            else:
                shell = self._shell_around(np.zeros(self.n))
                res = decade_mass_integral(shell, rel_tol=self.rel_tol,
                                           support_radius=supp,
                                           breakpoints=self.breakpoints)
            self._mass_cache = res
        return self._mass_cache

    @property
    def alpha(self):
        return self.gconst * self.mass().value

    def _effective_support(self):
        """Radius beyond which f's mass is below tolerance (None if unknown).

        Lets the kernel integrals truncate instead of re-walking decades
        for every evaluation point."""
        res = self.mass()
        return res.r_reached * 10.0 if res.converged_early else None

    # -- kernel table -------------------------------------------------------

    def kernel_table(self, **kwargs) -> KernelTable:
        if self._table is None:
            self._table = KernelTable.build(self.n, **kwargs)
        return self._table

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self._value_single(x)
        return np.array([self._value_single(p) for p in x])

    def _value_single(self, x):
        r = float(np.linalg.norm(x))
        if self._phi is not None:
            return self.value_radial(np.array([r]))[0]
        return self._value_general(x)

    def value_radial(self, radii):
        """L(f)(|x|) for a radial density, vectorized over radii."""
        if self._phi is None:
            raise QflatError("value_radial needs a radial density")
        n, area, phi = self.n, self.area, self._phi
        supp = self.f.caps.support_radius
        if supp is None:
            # truncation radius learned from the mass integral
            supp = self._effective_support()
        out = np.empty(len(radii))
        for i, r in enumerate(np.asarray(radii, dtype=float)):
            if r == 0.0:
                out[i] = 0.0
                continue

            def integrand(s, r=r):
                s = np.asarray(s, dtype=float)
                kern = angular_log_kernel(n, np.full_like(s, r), s)
                return (np.log(s) - kern) * np.asarray(phi(s), dtype=float) * area * s ** (n - 1)

            # n = 2: the integrand vanishes identically for s > r
            cut = min(r, supp) if supp is not None else r
            head = integrate_radial(integrand, 0.0, cut, rel_tol=self.rel_tol,
                                    abs_tol=1e-13, breakpoints=self.breakpoints)
            tail = 0.0
            if self.n > 2 and (supp is None or supp > cut):
                # 1e-12 absolute floor: far below every downstream tolerance
                budget = max(self.rel_tol * abs(head), 1e-12)
                if supp is None:
                    tail = decade_mass_integral(integrand, r0=cut, rel_tol=self.rel_tol,
                                                abs_tol=budget,
                                                breakpoints=self.breakpoints).value
                else:
                    tail = integrate_radial(integrand, cut, supp, rel_tol=self.rel_tol,
                                            abs_tol=budget, breakpoints=self.breakpoints)
            out[i] = self.gconst * (head + tail)
        return out

    def profile(self, r_max=1e6, use_spline=True) -> RadialProfile:
        """Radial profile of L(f) with the exact logarithmic far field.

        Beyond r_max the profile continues as -alpha log r + const, which
        is accurate once the mass outside r_max is negligible.
        """
        if self._phi is None:
            raise QflatError("profiles exist only for radial densities")
        prof = RadialProfile(fn=lambda rr: self.value_radial(np.atleast_1d(rr)),
                             r_max=r_max, use_spline=use_spline,
                             name=f"L({self.f.name})")
        alpha = self.alpha
        kappa = float(self.value_radial(np.array([r_max]))[0]) + alpha * math.log(r_max)
        prof.set_asymptote(-alpha, kappa)
        return prof

    # -- general (non-radial) path -------------------------------------------

    def _shell_fixed(self, x, rho, resolution):
        dirs, wts = sphere_rule(self.n, resolution)
        pts = x[None, None, :] + rho[:, None, None] * dirs[None, :, :]
        vals = self.f(pts.reshape(-1, self.n)).reshape(len(rho), len(wts))
        return (vals @ wts) * rho ** (self.n - 1)

    def _shell_around(self, x):
        """rho -> rho^{n-1} * integral of f(x + rho w) over unit directions w.

        Angular resolution refines until stable: a source of size d at
        distance rho subtends an angle d/rho, so fixed orders under-resolve
        distant shells.
        """
        if self.n == 2:
            def shell(rho):
                rho = np.atleast_1d(np.asarray(rho, dtype=float))
                return circle_integral(self.f, x, rho, rel_tol=self.rel_tol * 0.1)

            return shell

        def shell(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            res = self.sphere_resolution
            prev = self._shell_fixed(x, rho, res)
            while res < 8 * self.sphere_resolution:
                res *= 2
                cur = self._shell_fixed(x, rho, res)
                if np.all(np.abs(cur - prev)
                          <= 1e-7 * np.maximum(np.abs(cur), 1e-300) + 1e-300):
                    return cur
                prev = cur
            return prev

        return shell

    def _log_moment(self):
        """A = integral of log|y| f(y) dy."""
        if self._log_moment_cache is None:
            shell = self._shell_around(np.zeros(self.n))
            supp = self.f.caps.support_radius
            g = lambda rho: shell(rho) * np.log(np.maximum(rho, 1e-300))
            self._log_moment_cache = decade_mass_integral(
                g, rel_tol=self.rel_tol, support_radius=supp).value
        return self._log_moment_cache

    def _value_general(self, x):
        n = self.n
        r = float(np.linalg.norm(x))
        eps = min(1.0, 1.0 / (1.0 + r))
        fx = float(self.f(x))
        shell = self._shell_around(x)
        area = self.area

        # N(x) = integral of log(1/|x-y|) f(y) dy, singularity subtracted:
        # the closed-form ball integral of log(1/|z|) carries f(x).
        w_eps = area * eps ** n * (1.0 / n ** 2 - math.log(eps) / n)

        def inner(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            return -np.log(rho) * (shell(rho) - fx * area * rho ** (n - 1))

        inner_val = integrate_radial(inner, 0.0, eps, rel_tol=self.rel_tol * 10)

        supp = self.f.caps.support_radius
        outer_cut = None if supp is None else r + supp + 1.0

        def outer(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            return -np.log(rho) * shell(rho)

        if outer_cut is not None:
            outer_val = integrate_radial(outer, eps, outer_cut, rel_tol=self.rel_tol * 10,
                                         breakpoints=(1.0,) if eps < 1.0 < outer_cut else ())
        else:
            outer_val = decade_mass_integral(outer, r0=eps, rel_tol=self.rel_tol * 10,
                                             breakpoints=(1.0,)).value
        newt = fx * w_eps + inner_val + outer_val
        return self.gconst * (self._log_moment() + newt)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def log_potential(f: ScalarField, x, evaluator: PotentialEvaluator | None = None) -> float:
    """L(f)(x); builds a throwaway evaluator unless one is supplied."""
    ev = evaluator if evaluator is not None else PotentialEvaluator(f)
    return float(ev(np.asarray(x, dtype=float)))


def total_mass_alpha(f: ScalarField, rel_tol=1e-8) -> AlphaEstimate:
    """Normalized total mass g_n * integral(f).

    Radial densities reduce to a 1-D integral against |S^{n-1}| r^{n-1};
    NonIntegrableError propagates when the condensed decade tails fail the
    ratio test.
    """
    ev = PotentialEvaluator(f, rel_tol=rel_tol)
    res = ev.mass()
    return AlphaEstimate(
        alpha_hat=ev.gconst * res.value,
        window=(0.0, res.r_reached),
        residual=abs(ev.gconst) * res.tail_estimate,
        method="mass_integral",
    )


def potential_asymptote(f: ScalarField, radii, ball_radius=1.0,
                        rel_tol=1e-7) -> AlphaEstimate:
    """Fit of ball means of L(f) against log R; the slope estimates -alpha.

    Ball means of radius 1 rather than pointwise values keep mass
    concentrations from polluting the fit.
    """
    radii = require_window(np.asarray(radii, dtype=float), what="asymptote radii")
    ev = PotentialEvaluator(f, rel_tol=max(rel_tol, 1e-9))
    n = f.dim.n
    vol = sphere_constants(n).unit_ball_volume * ball_radius ** n
    if f.caps.is_radial:
        prof = ev.profile()
        means = np.array([
            offset_ball_integral_radial(prof, n, R, ball_radius, rel_tol=rel_tol) / vol
            for R in radii
        ])
    else:
        from .calculus import ball_mean
        wrapper = ScalarField(dim=f.dim, fn=lambda pts: ev(pts), name=f"L({f.name})")
        e1 = np.zeros(n)
        e1[0] = 1.0
        means = np.array([ball_mean(wrapper, R * e1, ball_radius, rel_tol=rel_tol)
                          for R in radii])
    fit = fit_linear_logx(radii, means)
    return AlphaEstimate(
        alpha_hat=-fit.exponent,
        window=fit.window,
        residual=fit.residual,
        method="asymptote_fit",
    )


@dataclass(frozen=True)
class BoundCheckStats:
    """Window statistics of L(f)(x) + alpha log|x|."""

    sign: str
    max: float
    min: float
    mean: float
    drift: float      # mean(last third) - mean(first third)
    alpha: float


def potential_bound_check(f: ScalarField, sign: str, radii,
                          part_support_radius=None) -> BoundCheckStats:
    """One-sided boundedness diagnostics for L(f) + alpha log|x|.

    sign='plus' requires the positive part of f to have compact support
    (then the statistic is bounded above); sign='minus' mirrors it.  The
    precondition is asserted through f's support flag or the explicit
    part_support_radius argument.
    """
    if sign not in ("plus", "minus"):
        raise QflatError(f"sign must be 'plus' or 'minus', got {sign!r}")
    if f.caps.support_radius is None and part_support_radius is None:
        raise QflatError(
            f"precondition: the f^{'+' if sign == 'plus' else '-'} part must have "
            "compact support (set support_radius or pass part_support_radius)")
    radii = np.asarray(radii, dtype=float)
    bps = (part_support_radius,) if part_support_radius else ()
    ev = PotentialEvaluator(f, breakpoints=bps)
    alpha = ev.alpha
    if f.caps.is_radial:
        values = ev.value_radial(radii) + alpha * np.log(radii)
    else:
        rng = np.random.default_rng(7041)
        vals = []
        for r in radii:
            for _ in range(4):
                d = rng.normal(size=f.dim.n)
                d /= np.linalg.norm(d)
                vals.append(float(ev(r * d)) + alpha * math.log(r))
        values = np.asarray(vals)
    k = max(2, len(values) // 3)
    return BoundCheckStats(
        sign=sign,
        max=float(np.max(values)),
        min=float(np.min(values)),
        mean=float(np.mean(values)),
        drift=float(np.mean(values[-k:]) - np.mean(values[:k])),
        alpha=alpha,
    )
