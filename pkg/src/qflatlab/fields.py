"""Scalar fields on R^n: conformal factors u and curvature densities f.

A ScalarField is a vectorized pure function of points together with
capability flags: radial symmetry, compact support, optional closed-form
gradient and iterated-Laplacian evaluators.  RadialProfile is the 1-D fast
path behind radial fields; it optionally caches a cubic spline on a
geometric grid (64 nodes per decade) so that quadrature-backed profiles
stay cheap to evaluate in bulk.
"""

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import expr as expr_mod
from .errors import DimensionError, DomainEvalError, NotRadialError, QflatError

RADIAL_CHECK_TOL = 1e-10
SPLINE_NODES_PER_DECADE = 64
SPLINE_R_MIN = 1e-6
SPLINE_R_MAX = 1e6


@dataclass(frozen=True)
class Dimension:
    """Ambient dimension; must be an even integer >= 2."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise DimensionError(f"dimension must be an integer, got {self.n!r}")
        if self.n < 2 or self.n % 2 != 0:
            raise DimensionError(f"dimension must be an even integer >= 2, got {self.n}")

    def __int__(self):
        return self.n

    def __index__(self):
        return self.n


def as_dimension(d) -> Dimension:
    return d if isinstance(d, Dimension) else Dimension(int(d))


def check_point(x, dim: Dimension):
    """Validate a single point; returns a float array of shape (n,)."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (dim.n,):
        raise DimensionError(f"point has shape {arr.shape}, expected ({dim.n},)")
    if not np.all(np.isfinite(arr)):
        raise DomainEvalError(f"point has non-finite coordinates: {arr}")
    return arr


@dataclass(frozen=True)
class FieldCaps:
    """Capability flags of a ScalarField.

    laplacian_chain holds vectorized evaluators of Delta^k f for
    k = 1 .. n/2 (index 0 is Delta f); gradient returns an (m, n) array.
    """

    is_radial: bool = False
    support_radius: float | None = None
    laplacian_chain: tuple | None = None
    gradient: object | None = None


@dataclass(frozen=True, eq=False)
class ScalarField:
    dim: Dimension
    fn: object                       # vectorized (m, n) -> (m,)
    caps: FieldCaps = field(default_factory=FieldCaps)
    name: str = ""

    def __call__(self, x):
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = check_point(pts, self.dim)[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.dim.n:
            raise DimensionError(
                f"points have shape {pts.shape}, expected (m, {self.dim.n})")
        vals = np.asarray(self.fn(pts), dtype=float)
        if self.caps.support_radius is not None:
            inside = np.einsum("ij,ij->i", pts, pts) <= self.caps.support_radius ** 2
            vals = np.where(inside, vals, 0.0)
        if not np.all(np.isfinite(vals)):
            raise DomainEvalError(f"field {self.name or '<anonymous>'} returned non-finite values")
        return float(vals[0]) if single else vals

    def along_ray(self, direction=None):
        """phi(t) = f(t * direction) as a vectorized function of t >= 0."""
        n = self.dim.n
        d = np.zeros(n)
        d[0] = 1.0
        if direction is not None:
            d = np.asarray(direction, dtype=float)
            d = d / np.linalg.norm(d)

        def phi(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return self(t[:, None] * d[None, :])

        return phi


def eval_field(f: ScalarField, x) -> float:
    """Evaluate f at a single point (dimension-checked)."""
    return f(check_point(x, f.dim))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def constant_field(c, dim) -> ScalarField:
    dim = as_dimension(dim)
    c = float(c)
    zero_chain = tuple(lambda pts: np.zeros(len(pts)) for _ in range(dim.n // 2))

    def grad(pts):
        return np.zeros_like(pts)

    return ScalarField(
        dim=dim,
        fn=lambda pts: np.full(len(pts), c),
        caps=FieldCaps(is_radial=True, laplacian_chain=zero_chain, gradient=grad),
        name=f"const({c})",
    )


@dataclass(frozen=True)
class FieldExpression:
    """Parsed expression AST plus its ambient dimension."""

    ast: object
    dim: Dimension
    source: str

    @property
    def symbols(self):
        return expr_mod.free_symbols(self.ast)

    def to_source(self) -> str:
        return expr_mod.to_source(self.ast)

    def to_field(self) -> ScalarField:
        return expression_to_field(self)


def parse_field(src: str, dim) -> FieldExpression:
    dim = as_dimension(dim)
    ast = expr_mod.parse(src, dim.n)
    return FieldExpression(ast=ast, dim=dim, source=src)


def expression_to_field(fe: FieldExpression) -> ScalarField:
    dim = fe.dim
    syms = fe.symbols
    radial = syms <= {"r"}

    def fn(pts):
        env = {}
        for s in syms:
            if s == "r":
                env["r"] = np.sqrt(np.einsum("ij,ij->i", pts, pts))
            else:
                env[s] = pts[:, int(s[1:]) - 1]
        vals = np.asarray(expr_mod.evaluate(fe.ast, env), dtype=float)
        if vals.ndim == 0:
            vals = np.full(len(pts), float(vals))
        return vals

    f = ScalarField(dim=dim, fn=fn, caps=FieldCaps(is_radial=radial), name=fe.source)
    if radial:
        _radial_spot_check(f)
    return f


def field_from_expression(src: str, dim) -> ScalarField:
    return parse_field(src, dim).to_field()


def radial_field(phi, dim, support_radius=None, laplacian_chain=None,
                 gradient=None, name="", spot_check=False) -> ScalarField:
    """Field x -> phi(|x|) from a vectorized radial function phi."""
    dim = as_dimension(dim)

    def fn(pts):
        r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
        return np.asarray(phi(r), dtype=float)

    f = ScalarField(
        dim=dim, fn=fn,
        caps=FieldCaps(is_radial=True, support_radius=support_radius,
                       laplacian_chain=laplacian_chain, gradient=gradient),
        name=name or "radial",
    )
    if spot_check:
        _radial_spot_check(f)
    return f


def with_support(f: ScalarField, support_radius: float) -> ScalarField:
    return replace(f, caps=replace(f.caps, support_radius=float(support_radius)))


# ---------------------------------------------------------------------------
# radial verification and profiles
# ---------------------------------------------------------------------------

def _rotation_matrices(n, count, seed=20210):
    rng = np.random.default_rng(seed + n)
    mats = []
    for _ in range(count):
        q, r = np.linalg.qr(rng.normal(size=(n, n)))
        q = q * np.sign(np.diag(r))
        mats.append(q)
    return mats

def _radial_spot_check(f: ScalarField, radii=(0.17, 0.9, 3.7, 21.0, 140.0),
                       n_rotations=4, tol=RADIAL_CHECK_TOL):
    n = f.dim.n
    base = np.zeros((len(radii), n))
    base[:, 0] = radii
    ref = f(base)
    for q in _rotation_matrices(n, n_rotations):
        rotated = base @ q.T
        vals = f(rotated)
        err = np.max(np.abs(vals - ref) / np.maximum(1.0, np.abs(ref)))
        if err > tol:
            raise NotRadialError(
                f"field {f.name or '<anonymous>'} fails the rotation check "
                f"(relative deviation {err:.2e} > {tol:.0e})")


def restrict_radial(f: ScalarField, r_max=SPLINE_R_MAX, use_spline=False) -> "RadialProfile":
    """Radial profile phi with phi(|x|) = f(x).

    If f is not flagged radial, rotation sampling at validation radii must
    pass (tolerance 1e-10) or NotRadialError is raised.
    """
    _radial_spot_check(f)

    n = f.dim.n

    def phi(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        pts = np.zeros((r.size, n))
        pts[:, 0] = r
        return f(pts)

    return RadialProfile(fn=phi, r_max=r_max, use_spline=use_spline,
                         name=f.name, support_radius=f.caps.support_radius)


class RadialProfile:
    """1-D profile phi(r) for r >= 0 with derivative access.

    Backed by a direct callable; when ``use_spline`` is set, bulk
    evaluation goes through a cubic spline on a geometric grid (64 nodes
    per decade on [1e-6, r_max]) validated against the callable at
    off-node radii.  Beyond r_max an optional asymptote a*log(r) + b takes
    over (callers set it when the far field is known to be logarithmic).
    """

    def __init__(self, fn, r_max=SPLINE_R_MAX, use_spline=False, name="",
                 support_radius=None, validate_tol=1e-7):
        self.fn = fn
        self.r_max = float(r_max)
        self.name = name
        self.support_radius = support_radius
        self.validate_tol = validate_tol
        self._spline = None
        self._value0 = None
        self._asymptote = None  # (a, b): phi(r) ~ a*log r + b beyond r_max
        if use_spline:
            self._build_spline()

    @classmethod
    def from_table(cls, nodes, values, name="radial-table"):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 4 or np.any(np.diff(nodes) <= 0):
            raise QflatError("radial table needs >= 4 strictly increasing nodes")
        spline = CubicSpline(nodes, values, extrapolate=True)
        prof = cls(fn=lambda r: spline(np.maximum(r, nodes[0])),
                   r_max=nodes[-1], name=name)
        prof._spline = spline
        return prof

    def set_asymptote(self, a, b):
        self._asymptote = (float(a), float(b))

    def _build_spline(self):
        decades = math.log10(self.r_max / SPLINE_R_MIN)
        count = int(round(decades * SPLINE_NODES_PER_DECADE)) + 1
        nodes = np.geomspace(SPLINE_R_MIN, self.r_max, count)
        vals = np.asarray(self.fn(nodes), dtype=float)
        self._spline = CubicSpline(np.log(nodes), vals)
        self._value0 = float(np.asarray(self.fn(np.array([0.0])))[0])
        # validate at geometric midpoints of a node subsample
        mids = np.sqrt(nodes[50:-1:97] * nodes[51::97])
        direct = np.asarray(self.fn(mids), dtype=float)
        interp = self._spline(np.log(mids))
        err = np.max(np.abs(direct - interp) / np.maximum(1.0, np.abs(direct)))
        if err > self.validate_tol:
            raise QflatError(
                f"radial spline for {self.name!r} misses validation tolerance "
                f"({err:.2e} > {self.validate_tol:.0e})")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        rr = np.atleast_1d(r)
        if np.any(rr < 0):
            raise DomainEvalError("radial profile queried at r < 0")
        if self._spline is not None and self._value0 is not None:
            out = np.empty_like(rr)
            tiny = rr < SPLINE_R_MIN
            far = rr > self.r_max
            mid = ~tiny & ~far
            out[tiny] = self._value0
            out[mid] = self._spline(np.log(rr[mid]))
            if np.any(far):
                if self._asymptote is None:
                    out[far] = np.asarray(self.fn(rr[far]), dtype=float)
                else:
                    a, b = self._asymptote
                    out[far] = a * np.log(rr[far]) + b
        else:
            if self._asymptote is not None:
                out = np.empty_like(rr)
                far = rr > self.r_max
                out[~far] = np.asarray(self.fn(rr[~far]), dtype=float)
                a, b = self._asymptote
                out[far] = a * np.log(rr[far]) + b
            else:
                out = np.asarray(self.fn(rr), dtype=float)
        return float(out[0]) if scalar else out

    def derivative(self, r, order=1):
        """phi^(order)(r) by a local Chebyshev fit of the underlying callable."""
        from .calculus import chebfit_derivatives  # local import, avoids a cycle
        return chebfit_derivatives(self, float(r), max_order=order)[order]

    def to_field(self, dim, **caps) -> ScalarField:
        return radial_field(self, dim, name=self.name, **caps)


# ---------------------------------------------------------------------------
# grid sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridField:
    """Dense samples of a field on an axis-aligned box.

    Node coordinates are bit-exact functions of (box, resolution):
    axes[i][k] = lo_i + k * (hi_i - lo_i) / (resolution - 1).
    """

    box: tuple                # ((lo, hi), ...) per axis
    resolution: int           # nodes per axis
    axes: tuple               # per-axis node arrays
    values: np.ndarray        # shape (resolution,) * n


def sample_grid(f: ScalarField, box, resolution: int) -> GridField:
    if resolution < 2:
        raise QflatError(f"resolution must be >= 2, got {resolution}")
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != f.dim.n:
        raise DimensionError(f"box has {len(box)} axes, field dimension is {f.dim.n}")
    for lo, hi in box:
        if not hi > lo:
            raise QflatError(f"degenerate box axis [{lo}, {hi}]")
    axes = tuple(
        np.array([lo + k * (hi - lo) / (resolution - 1) for k in range(resolution)])
        for lo, hi in box
    )
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    try:
        vals = f(pts)
    except DomainEvalError:
        # locate the first offending node for the error message
        for idx in range(len(pts)):
            try:
                f(pts[idx])
            except DomainEvalError as e:
                multi = np.unravel_index(idx, mesh[0].shape)
                raise DomainEvalError(
                    f"evaluation failed at grid node {tuple(int(i) for i in multi)} "
                    f"= {pts[idx]}: {e}") from e
        raise
    return GridField(box=box, resolution=resolution, axes=axes,
                     values=vals.reshape(mesh[0].shape))


# ---------------------------------------------------------------------------
# JSON field/metric specification documents
# ---------------------------------------------------------------------------

FIELD_DOC_KINDS = ("builtin", "expression", "radial-table")


def field_from_document(doc: dict) -> ScalarField:
    """Build the conformal factor u from a metric specification document.

    Document schema: {"n": int, "kind": "builtin"|"expression"|"radial-table",
    "name"?: str, "params"?: object, "u"?: str, "nodes"?: [[r, value]]}.
    The builtin kind is resolved by the gallery module.
    """
    kind = doc.get("kind")
    dim = as_dimension(int(doc["n"]))
    if kind == "expression":
        return field_from_expression(doc["u"], dim)
    if kind == "radial-table":
        nodes = np.asarray(doc["nodes"], dtype=float)
        prof = RadialProfile.from_table(nodes[:, 0], nodes[:, 1], name="radial-table")
        return prof.to_field(dim)
    if kind == "builtin":
        from .gallery import gallery
        return gallery(doc["name"], doc.get("params", {}), dim).u
    raise QflatError(f"unknown field kind {kind!r}")
