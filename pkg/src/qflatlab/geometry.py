"""Conformal volumes, distances, growth exponents and classifications.

All quantities refer to the metric g = e^{2u} |dx|^2: lengths pick up a
factor e^u along curves, volumes a factor e^{nu}.

Finite-versus-infinite questions (ray length to infinity, total volume,
diameter) are decided by a Cauchy-condensation ratio test on blocks over
radii R_{j+1} = R_j^2.  Plain dyadic ratio tests cannot separate
integrands like 1/(t log^{0.75} t) (divergent) from 1/(t log^2 t)
(convergent) because both have segment ratios tending to 1; on condensed
blocks the ratios tend to distinct constants and the test stays decisive.
An inconclusive band remains and is reported as such.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as sparse_dijkstra

from .constants import sphere_constants
from .errors import GridError, QflatError, RangeOverflowError
from .fields import RadialProfile, ScalarField, check_point
from .fitting import GrowthEstimate, fit_loglog, require_window
from .quadrature import (TailClassification, ball_integral_generic,
                         circle_integral, classify_log_blocks,
                         integrate_radial, log_condensation_blocks,
                         offset_ball_integral_radial, sphere_rule)

MAX_LOG2_RADIUS = 256.0   # condensation blocks stop at r = 2^256 ~ 1.2e77
EXP_OVERFLOW = 700.0


@dataclass(eq=False)
class MetricContext:
    """A conformally flat metric e^{2u}|dx|^2 plus cached structure.

    completeness_hint is user-asserted and only recorded; density, when
    present, is the curvature density (-Delta)^{n/2} u as a ScalarField
    (exact for gallery metrics), and density_tractable marks densities
    whose potential is cheap enough for decomposition fits.
    """

    u: ScalarField
    dim: object
    radial_profile: RadialProfile | None = None
    completeness_hint: bool | None = None
    density: ScalarField | None = None
    density_tractable: bool = False
    label: str = ""

    @property
    def n(self):
        return self.u.dim.n

    @property
    def is_radial(self):
        return self.u.caps.is_radial

    def u_radial(self):
        if self.radial_profile is not None:
            return self.radial_profile
        if not self.is_radial:
            raise QflatError(f"metric {self.label!r} is not radial")
        return self.u.along_ray()

    def ray_log_speed(self, direction=None):
        """t -> u(t * direction): log of the length density along a ray."""
        if direction is None and self.is_radial:
            phi = self.u_radial()
            return lambda t: np.asarray(phi(np.asarray(t, dtype=float)), dtype=float)
        return self.u.along_ray(direction)


def _guarded_exp(exponents, what):
    exponents = np.asarray(exponents, dtype=float)
    if np.any(exponents > EXP_OVERFLOW):
        raise RangeOverflowError(
            f"{what}: exponent {np.max(exponents):.3g} overflows e^x")
    return np.exp(exponents)


# ---------------------------------------------------------------------------
# volumes
# ---------------------------------------------------------------------------

def conformal_volume(ctx: MetricContext, R, center=None, rel_tol=1e-6) -> float:
    """Volume of the euclidean ball B_R(center) in the metric e^{2u}|dx|^2."""
    if R <= 0:
        raise QflatError(f"volume radius must be positive, got {R}")
    n = ctx.n
    area = sphere_constants(n).boundary_area
    if ctx.is_radial:
        phi = ctx.u_radial()

        def density(t):
            t = np.asarray(t, dtype=float)
            return _guarded_exp(n * np.asarray(phi(t), dtype=float), "conformal volume")

        c_norm = 0.0 if center is None else float(np.linalg.norm(center))
        if c_norm == 0.0:
            return integrate_radial(
                lambda t: density(t) * area * np.asarray(t) ** (n - 1),
                0.0, R, rel_tol=rel_tol)
        return offset_ball_integral_radial(density, n, c_norm, R, rel_tol=rel_tol)

    center = np.zeros(n) if center is None else check_point(center, ctx.u.dim)
    vol_density = ScalarField(
        dim=ctx.u.dim,
        fn=lambda pts: _guarded_exp(n * ctx.u(pts), "conformal volume"),
        name=f"e^({n}u)")
    if n == 2:
        def shell(t):
            t = np.atleast_1d(t)
            return circle_integral(vol_density, center, t, rel_tol=rel_tol / 10)

        return integrate_radial(shell, 0.0, R, rel_tol=rel_tol)
    val, err = ball_integral_generic(vol_density, n, R, center=center)
    if err > 5e-3:
        raise QflatError(
            f"volume quadrature for non-radial metric in n={n} did not settle "
            f"(relative change {err:.2e})")
    return val


def volume_growth(ctx: MetricContext, radii, rel_tol=1e-6) -> GrowthEstimate:
    """Fitted slope of log V_g(B_R) against log |B_R|.

    For radial metrics the volumes are accumulated over radial segments in
    one sweep.
    """
    radii = np.sort(require_window(np.asarray(radii, dtype=float), what="volume radii"))
    n = ctx.n
    omega = sphere_constants(n).unit_ball_volume
    if ctx.is_radial:
        phi = ctx.u_radial()
        area = sphere_constants(n).boundary_area

        def integrand(t):
            t = np.asarray(t, dtype=float)
            return _guarded_exp(
                n * np.asarray(phi(t), dtype=float) + (n - 1) * np.log(np.maximum(t, 1e-300))
                + math.log(area), "volume growth")

        vols = []
        acc = 0.0
        prev = 0.0
        for R in radii:
            acc += integrate_radial(integrand, prev, R, rel_tol=rel_tol)
            prev = R
            vols.append(acc)
        vols = np.asarray(vols)
    else:
        vols = np.array([conformal_volume(ctx, R, rel_tol=rel_tol) for R in radii])
    return fit_loglog(radii, vols, abscissa=omega * radii ** n)


def measure_distance(ctx: MetricContext, x, y, rel_tol=1e-6) -> float:
    """delta(x, y): n-th root of the conformal volume of the ball whose
    diameter is the segment from x to y."""
    x = check_point(x, ctx.u.dim)
    y = check_point(y, ctx.u.dim)
    if np.array_equal(x, y):
        raise QflatError("measure distance needs two distinct points")
    center = 0.5 * (x + y)
    rho = 0.5 * float(np.linalg.norm(x - y))
    vol = conformal_volume(ctx, rho, center=center, rel_tol=rel_tol)
    return vol ** (1.0 / ctx.n)


# ---------------------------------------------------------------------------
# ray lengths and tail classification
# ---------------------------------------------------------------------------

def _ray_blocks(ctx, direction=None, r_start=2.0):
    log_speed = ctx.ray_log_speed(direction)
    return log_condensation_blocks(log_speed, r_start=r_start,
                                   max_log2_r=MAX_LOG2_RADIUS)


def classify_ray(ctx: MetricContext, direction=None) -> TailClassification:
    """Finite-vs-infinite classification of the ray integral to infinity."""
    return classify_log_blocks(_ray_blocks(ctx, direction))


def ray_length(ctx: MetricContext, direction=None, r0=0.0, r1=math.inf,
               rel_tol=1e-8) -> float:
    """Length of the radial segment [r0, r1] along a fixed direction.

    r1 = inf runs the condensation classifier first: returns inf when the
    tail certifies divergence, the extrapolated total when it certifies
    convergence, and raises QflatError when the tail ratios sit in the
    inconclusive band.
    """
    if r0 < 0 or r1 < r0:
        raise QflatError(f"bad ray range [{r0}, {r1}]")
    log_speed = ctx.ray_log_speed(direction)

    def speed(t):
        t = np.asarray(t, dtype=float)
        return _guarded_exp(np.asarray(log_speed(t), dtype=float), "ray length")

    if math.isfinite(r1):
        return integrate_radial(speed, r0, r1, rel_tol=rel_tol)
    start = max(2.0, 2.0 * max(r0, 1.0))
    blocks = log_condensation_blocks(log_speed, r_start=start,
                                     max_log2_r=MAX_LOG2_RADIUS)
    cls = classify_log_blocks(blocks)
    if cls.kind == "infinite":
        return math.inf
    if cls.kind == "inconclusive":
        raise QflatError(
            "ray integral to infinity is inconclusive under the condensation "
            f"ratio test (last ratios {cls.ratios[-3:] if cls.ratios.size else '[]'})")
    head = integrate_radial(speed, r0, start, rel_tol=rel_tol, abs_tol=1e-13)
    with np.errstate(over="ignore"):
        body = float(np.sum(np.exp(blocks)))
    tail = math.exp(cls.log_tail_estimate) if np.isfinite(cls.log_tail_estimate) else 0.0
    return head + body + tail


@dataclass(frozen=True)
class DiameterReport:
    classification: str        # "finite" | "infinite" | "inconclusive"
    value: float | None
    exact: bool                # True when the collapsing-ends argument applies
    detail: str = ""

    def to_json_dict(self):
        return {"class": self.classification, "value": self.value}


def diameter_estimate(ctx: MetricContext, n_directions=8, seed=4099) -> DiameterReport:
    """Diameter classification of (R^n, e^{2u}|dx|^2).

    For radial metrics with a convergent ray integral L = int_0^inf e^u dt
    the diameter equals L exactly whenever the far spheres collapse
    (r e^{u(r)} -> 0): paths through the origin give d(x, y) <= F(|x|) +
    F(|y|), paths around infinity give d(x, y) <= (L - F(|x|)) + (L -
    F(|y|)) + arc, the smaller of the two is at most L, and d(0, x) ->
    L realizes it.  Without collapse the value 2L is reported as an upper
    bound (exact=False).
    """
    if ctx.is_radial:
        cls = classify_ray(ctx)
        if cls.kind == "infinite":
            return DiameterReport("infinite", None, True, "ray integral diverges")
        if cls.kind == "inconclusive":
            return DiameterReport("inconclusive", None, False,
                                  "condensation ratios in the undecidable band")
        total = ray_length(ctx, r0=0.0, r1=math.inf)
        phi = ctx.u_radial()
        probes = np.array([2.0 ** 32, 2.0 ** 64, 2.0 ** 128])
        arc = probes * np.exp(np.asarray(phi(probes), dtype=float))
        collapsed = bool(np.all(np.diff(arc) < 0) and arc[-1] < 1e-6 * total)
        if collapsed:
            return DiameterReport("finite", total, True, "collapsing ends")
        return DiameterReport("finite", 2.0 * total, False,
                              "upper bound 2 * ray length (ends do not collapse)")

    rng = np.random.default_rng(seed)
    kinds = []
    totals = []
    for _ in range(n_directions):
        d = rng.normal(size=ctx.n)
        d /= np.linalg.norm(d)
        cls = classify_ray(ctx, direction=d)
        kinds.append(cls.kind)
        if cls.kind == "finite":
            totals.append(ray_length(ctx, direction=d, r0=0.0, r1=math.inf))
    if all(k == "infinite" for k in kinds):
        return DiameterReport("infinite", None, False, "all sampled rays diverge")
    if all(k == "finite" for k in kinds):
        return DiameterReport("finite", 2.0 * max(totals), False,
                              "all sampled rays converge; crude pairwise bound")
    return DiameterReport("inconclusive", None, False,
                          "sampled rays disagree or are undecidable")


def volume_classification(ctx: MetricContext, rel_tol=1e-8) -> DiameterReport:
    """Finite-vs-infinite classification of the total conformal volume."""
    n = ctx.n
    area = sphere_constants(n).boundary_area
    if ctx.is_radial:
        phi = ctx.u_radial()

        def log_integrand(t):
            t = np.asarray(t, dtype=float)
            return (n * np.asarray(phi(t), dtype=float)
                    + (n - 1) * np.log(t) + math.log(area))
    else:
        dirs, wts = sphere_rule(n, 16)
        logw = np.log(wts)

        def log_integrand(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            pts = t[:, None, None] * dirs[None, :, :]
            uv = ctx.u(pts.reshape(-1, n)).reshape(len(t), len(wts))
            from scipy.special import logsumexp
            return logsumexp(n * uv + logw[None, :], axis=1) + (n - 1) * np.log(t)

    blocks = log_condensation_blocks(log_integrand, r_start=2.0,
                                     max_log2_r=MAX_LOG2_RADIUS)
    cls = classify_log_blocks(blocks)
    if cls.kind == "infinite":
        return DiameterReport("infinite", None, True, "volume blocks diverge")
    if cls.kind == "inconclusive":
        return DiameterReport("inconclusive", None, False, "")
    head = conformal_volume(ctx, 2.0, rel_tol=max(rel_tol, 1e-8))
    with np.errstate(over="ignore"):
        body = float(np.sum(np.exp(blocks)))
    tail = math.exp(cls.log_tail_estimate) if np.isfinite(cls.log_tail_estimate) else 0.0
    return DiameterReport("finite", head + body + tail, True, "")


# ---------------------------------------------------------------------------
# grid geodesics
# ---------------------------------------------------------------------------

# 16-neighbor stencil: axis, diagonal and knight moves (chamfer error < 3%)
_OFFSETS_2D = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2))
_EDGE_SUBSAMPLES = 4


class GeodesicGrid:
    """Weighted 16-neighbor graph on a regular 2-D grid.

    Edge weights are trapezoidal integrals of e^u along the straight
    segment with 4 sub-intervals.  Shortest paths are an upper bound on
    d_g up to the chamfer factor (about 1.03 for this stencil).
    """

    def __init__(self, ctx: MetricContext, box, resolution: int):
        if ctx.n != 2:
            raise GridError("grid geodesics are implemented for n = 2")
        if resolution < 8:
            raise GridError(f"grid resolution must be >= 8, got {resolution}")
        self.ctx = ctx
        self.box = tuple((float(lo), float(hi)) for lo, hi in box)
        self.resolution = int(resolution)
        axes = [np.array([lo + k * (hi - lo) / (resolution - 1) for k in range(resolution)])
                for lo, hi in self.box]
        self.axes = axes
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        self.nodes = np.stack([xx.ravel(), yy.ravel()], axis=1)
        self._matrix = self._build_matrix()
        self._dist_cache = {}

    def _build_matrix(self):
        res = self.resolution
        nodes = self.nodes
        rows, cols, weights = [], [], []
        idx = np.arange(res * res).reshape(res, res)
        ts = np.linspace(0.0, 1.0, _EDGE_SUBSAMPLES + 1)
        trap = np.full(_EDGE_SUBSAMPLES + 1, 1.0 / _EDGE_SUBSAMPLES)
        trap[0] *= 0.5
        trap[-1] *= 0.5
        for di, dj in _OFFSETS_2D:
            src = idx[max(0, -di):res - max(0, di), max(0, -dj):res - max(0, dj)].ravel()
            dst = idx[max(0, di):res + min(0, di), max(0, dj):res + min(0, dj)].ravel()
            a = nodes[src]
            b = nodes[dst]
            seg = np.linalg.norm(b[0] - a[0])
            pts = a[:, None, :] + ts[None, :, None] * (b - a)[:, None, :]
            speeds = _guarded_exp(self.ctx.u(pts.reshape(-1, 2)), "grid edge weight")
            w = seg * (speeds.reshape(len(a), -1) @ trap)
            rows.extend((src, dst))
            cols.extend((dst, src))
            weights.extend((w, w))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        weights = np.concatenate(weights)
        m = res * res
        return csr_matrix((weights, (rows, cols)), shape=(m, m))

    def node_index(self, x):
        x = check_point(x, self.ctx.u.dim)
        ij = []
        for axis, (lo, hi), v in zip(self.axes, self.box, x):
            if not (lo - 1e-12 <= v <= hi + 1e-12):
                raise GridError(f"point {x} outside grid box {self.box}")
            ij.append(int(np.argmin(np.abs(axis - v))))
        return ij[0] * self.resolution + ij[1]

    def distances_from(self, x):
        i = self.node_index(x)
        if i not in self._dist_cache:
            self._dist_cache[i] = sparse_dijkstra(self._matrix, indices=i)
        return self._dist_cache[i]

    def distance(self, x, y) -> float:
        return float(self.distances_from(x)[self.node_index(y)])


@dataclass(frozen=True)
class DistanceResult:
    value: float
    method: str                 # "radial_ray" | "grid_dijkstra"
    resolution: int | None
    upper_bound_flag: bool

    def to_json_dict(self):
        return {"value": self.value, "method": self.method,
                "resolution": self.resolution,
                "upper_bound": self.upper_bound_flag}


@lru_cache(maxsize=32)
def _grid_for(ctx, box, resolution):
    return GeodesicGrid(ctx, box, resolution)


def geodesic_distance(ctx: MetricContext, x, y, resolution=129, box=None,
                      method="auto") -> DistanceResult:
    """Geodesic distance estimate between x and y.

    Radial metrics with one endpoint at the origin integrate e^u along the
    ray exactly (rays from the origin are minimizing for radial metrics).
    Otherwise a 16-neighbor grid shortest path is returned and flagged as
    an upper bound.  method forces one of the two ("radial" | "grid").
    """
    x = check_point(x, ctx.u.dim)
    y = check_point(y, ctx.u.dim)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    radial_ok = ctx.is_radial and min(nx, ny) < 1e-14
    if method == "radial" and not radial_ok:
        raise QflatError("radial geodesics need a radial metric and one "
                         "endpoint at the origin")
    if radial_ok and method in ("auto", "radial"):
        far, r = (x, nx) if nx >= ny else (y, ny)
        if r < 1e-14:
            return DistanceResult(0.0, "radial_ray", None, False)
        val = ray_length(ctx, direction=far / r, r0=0.0, r1=r)
        return DistanceResult(val, "radial_ray", None, False)
    if box is None:
        span = 1.5 * max(1.0, float(np.max(np.abs(np.stack([x, y])))))
        box = ((-span, span), (-span, span))
    grid = _grid_for(ctx, tuple(tuple(b) for b in box), resolution)
    return DistanceResult(grid.distance(x, y), "grid_dijkstra", resolution, True)


def distance_growth_exponent(ctx: MetricContext, p, radii,
                             direction=None) -> GrowthEstimate:
    """Slope of log d_g(x_R, p) against log R along a fixed ray.

    Radial metrics use exact ray distances from the origin; distances to a
    fixed p differ from those by at most d_g(0, p), which does not move
    the fitted exponent.  Non-radial metrics are out of scope here (grid
    windows cannot span decades).
    """
    radii = np.sort(require_window(np.asarray(radii, dtype=float), what="distance radii"))
    p = check_point(p, ctx.u.dim)
    if not ctx.is_radial:
        raise QflatError("distance growth exponent needs a radial metric")
    log_speed = ctx.ray_log_speed(direction)

    def speed(t):
        t = np.asarray(t, dtype=float)
        return _guarded_exp(np.asarray(log_speed(t), dtype=float), "ray length")

    dists = []
    acc = 0.0
    prev = 0.0
    for R in radii:
        acc += integrate_radial(speed, prev, R, rel_tol=1e-8)
        prev = R
        dists.append(acc)
    return fit_loglog(radii, np.asarray(dists))


@dataclass(frozen=True)
class AinftyRatioStats:
    min: float
    max: float
    mean: float
    count: int


def strong_ainfty_ratio(ctx: MetricContext, pairs, resolution=129,
                        box=None) -> AinftyRatioStats:
    """Empirical statistics of d_g / delta over sampled point pairs.

    Diagnostic only: a strong A-infinity weight makes the two distances
    globally comparable, but the comparability constant is not computed.
    """
    pairs = [(check_point(a, ctx.u.dim), check_point(b, ctx.u.dim)) for a, b in pairs]
    if not pairs:
        raise QflatError("need at least one pair")
    if box is None:
        span = 1.5 * max(1.0, max(float(np.max(np.abs(p))) for pair in pairs for p in pair))
        box = ((-span, span), (-span, span))
    grid = _grid_for(ctx, tuple(tuple(b) for b in box), resolution)
    ratios = []
    for a, b in pairs:
        if np.array_equal(a, b):
            raise QflatError("identical pair rejected (measure distance undefined)")
        dg = grid.distance(a, b)
        delta = measure_distance(ctx, a, b)
        ratios.append(dg / delta)
    ratios = np.asarray(ratios)
    return AinftyRatioStats(min=float(np.min(ratios)), max=float(np.max(ratios)),
                            mean=float(np.mean(ratios)), count=len(ratios))
