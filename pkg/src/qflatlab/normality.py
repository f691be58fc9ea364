"""Normality analysis: decomposition, growth criteria, aggregated verdicts.

A metric e^{2u}|dx|^2 with integrable curvature density f = (-Delta)^{n/2} u
is *normal* when u is the logarithmic potential of f up to a constant.
Numerically that surfaces in several equivalent ways, each implemented
here as a classifier:

* the volume entropy (slope of log V(B_R) against log |B_R|) settles to a
  finite value; in n = 2 that alone forces the polynomial remainder to be
  a constant,
* for n >= 4, the integrals of |Delta u| over B_R grow like o(R^n),
  equivalently integrals of |u| like o(R^{n+2}),
* for n >= 4, the negative part of scalar curvature satisfies
  int_{B_R} R^- e^{2u} = o(R^n),
* a direct least-squares fit of u - L(f) in a polynomial basis recovers a
  constant.

o(R^k) against O(R^k) is not finitely decidable; the growth classifier
reports little_o only when the fitted slope clears the threshold by a
margin, not_little_o at the threshold, and inconclusive in between.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import radial_jet, radial_laplacian_batch
from .constants import cohn_vossen_bound, sphere_constants
from .errors import DimensionError, NonIntegrableError, QflatError
from .fields import FieldCaps, ScalarField
from .fitting import GrowthEstimate
from .geometry import (DiameterReport, MetricContext, classify_ray,
                       diameter_estimate, volume_classification, volume_growth)
from .polynomials import Polynomial, monomials_upto
from .potential import PotentialEvaluator, total_mass_alpha
from .quadrature import decade_mass_integral, gl_rule, integrate_radial, sphere_rule

# Verdict boundary: fitted slopes sit strictly below a clean power because
# lower-order terms bias finite windows; a small guard absorbs that bias
# without eating into the little_o margin.
BOUNDARY_GUARD = 1e-3
NONCONSTANT_SE_FACTOR = 10.0
NONCONSTANT_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# growth classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthVerdict:
    fitted_exponent: float | None
    threshold: float
    margin: float
    verdict: str                  # "little_o" | "not_little_o" | "inconclusive"
    window: tuple = (0.0, 0.0)
    note: str = ""

    def to_json_dict(self):
        return {
            "verdict": self.verdict,
            "fitted_exponent": self.fitted_exponent,
            "threshold": self.threshold,
            "margin": self.margin,
            "window": list(self.window),
        }


def growth_classifier(samples, threshold, margin=0.25) -> GrowthVerdict:
    """Classify I(R) = o(R^threshold) from dyadic samples (R, I(R)).

    Fits the top half of the window.  Verdict rule: little_o when the
    slope is at most threshold - margin, not_little_o from the threshold
    down to a small float guard, inconclusive in between.
    """
    samples = sorted((float(r), float(v)) for r, v in samples)
    if len(samples) < 6:
        raise QflatError(f"growth classifier needs >= 6 samples, got {len(samples)}")
    if any(r <= 0 for r, _ in samples):
        raise QflatError("sample radii must be positive")
    if any(v < 0 for _, v in samples):
        raise QflatError("growth samples must be nonnegative")
    if all(v == 0.0 for _, v in samples):
        return GrowthVerdict(None, threshold, margin, "little_o",
                             (samples[0][0], samples[-1][0]), "identically zero")
    top = samples[len(samples) // 2:]
    top = [(r, v) for r, v in top if v > 0]
    if len(top) < 3:
        return GrowthVerdict(None, threshold, margin, "little_o",
                             (samples[0][0], samples[-1][0]),
                             "top-of-window samples vanish")
    t = np.log([r for r, _ in top])
    y = np.log([v for _, v in top])
    slope = float(np.polyfit(t, y, 1)[0])
    window = (samples[0][0], samples[-1][0])
    if slope >= threshold - BOUNDARY_GUARD:
        verdict = "not_little_o"
    elif slope <= threshold - margin:
        verdict = "little_o"
    else:
        verdict = "inconclusive"
    return GrowthVerdict(slope, threshold, margin, verdict, window)


# ---------------------------------------------------------------------------
# dyadic ball integrals of |integrand|
# ---------------------------------------------------------------------------

def _cumulative_radial(g, radii, n, rel_tol=1e-7):
    """I(R) = int_{B_R} g(|y|) dy at sorted radii, one radial sweep."""
    area = sphere_constants(n).boundary_area
    out = []
    acc = 0.0
    prev = 0.0
    for R in radii:
        acc += integrate_radial(
            lambda t: np.asarray(g(t), dtype=float) * area * np.asarray(t) ** (n - 1),
            prev, R, rel_tol=rel_tol, abs_tol=1e-12)
        prev = R
        out.append(acc)
    return np.asarray(out)


def _cumulative_shells(f_vec, radii, n, sphere_resolution=16, n_r=12):
    """I(R) = int_{B_R} f(y) dy by product-rule shells (classifier grade)."""
    dirs, wts = sphere_rule(n, sphere_resolution)
    x, w = gl_rule(n_r)
    out = []
    acc = 0.0
    prev = 0.0
    for R in radii:
        mid, half = 0.5 * (prev + R), 0.5 * (R - prev)
        t = mid + half * x
        wr = w * half * t ** (n - 1)
        pts = t[:, None, None] * dirs[None, :, :]
        vals = np.asarray(f_vec(pts.reshape(-1, n)), dtype=float).reshape(len(t), len(wts))
        acc += float(np.einsum("i,j,ij->", wr, wts, vals))
        prev = R
        out.append(acc)
    return np.asarray(out)


def dyadic_radii(k_min=1, k_max=10):
    return np.array([2.0 ** k for k in range(k_min, k_max + 1)])


def _laplacian_field_values(w: ScalarField):
    """Vectorized Delta w, from the analytic chain or the radial jet."""
    chain = w.caps.laplacian_chain
    if chain is not None and len(chain) >= 1:
        return lambda pts: np.asarray(chain[0](pts), dtype=float)
    if w.caps.is_radial:
        phi = w.along_ray()
        n = w.dim.n

        def lap(pts):
            r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
            return radial_laplacian_batch(phi, r, n, 1)

        return lap
    raise QflatError(
        "condition (a) needs a Laplacian: give the field an analytic chain "
        "or a radial structure")


def normality_condition_a(w: ScalarField, radii=None, margin=0.25) -> GrowthVerdict:
    """int_{B_R} |Delta w| dx = o(R^n)?  (n >= 4)"""
    n = w.dim.n
    if n < 4:
        raise DimensionError("condition (a) applies for n >= 4")
    radii = dyadic_radii() if radii is None else np.sort(np.asarray(radii, dtype=float))
    lap = _laplacian_field_values(w)
    if w.caps.is_radial:
        def along(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            pts = np.zeros((t.size, n))
            pts[:, 0] = t
            return np.abs(lap(pts))

        vals = _cumulative_radial(along, radii, n)
    else:
        vals = _cumulative_shells(lambda pts: np.abs(lap(pts)), radii, n)
    return growth_classifier(zip(radii, vals), threshold=n, margin=margin)


def normality_condition_b(w: ScalarField, radii=None, margin=0.25) -> GrowthVerdict:
    """int_{B_R} |w| dx = o(R^{n+2})?  (n >= 4)"""
    n = w.dim.n
    if n < 4:
        raise DimensionError("condition (b) applies for n >= 4")
    radii = dyadic_radii() if radii is None else np.sort(np.asarray(radii, dtype=float))
    if w.caps.is_radial:
        phi = w.along_ray()
        vals = _cumulative_radial(lambda t: np.abs(np.asarray(phi(t), dtype=float)), radii, n)
    else:
        vals = _cumulative_shells(lambda pts: np.abs(w(pts)), radii, n)
    return growth_classifier(zip(radii, vals), threshold=n + 2, margin=margin)


def scalar_curvature_values(u: ScalarField):
    """Vectorized R_g for radial fields or fields with analytic caps."""
    n = u.dim.n
    if n < 4:
        raise DimensionError("scalar curvature criterion applies for n >= 4")
    chain = u.caps.laplacian_chain
    grad = u.caps.gradient
    if chain is not None and grad is not None:
        def rg(pts):
            uv = u(pts)
            lap = np.asarray(chain[0](pts), dtype=float)
            g = np.asarray(grad(pts), dtype=float)
            grad2 = np.einsum("ij,ij->i", g, g)
            return 2.0 * (n - 1) * np.exp(-2.0 * uv) * (-lap - 0.5 * (n - 2) * grad2)

        return rg
    if u.caps.is_radial:
        phi = u.along_ray()

        def rg(pts):
            r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
            jet = radial_jet(phi, r, n, max_m=1)
            uv = jet.value()
            lap = jet.laplacian_power(1)
            du = jet.radial_derivative()
            return 2.0 * (n - 1) * np.exp(-2.0 * uv) * (-lap - 0.5 * (n - 2) * du ** 2)

        return rg
    raise QflatError("scalar criterion needs a radial field or analytic caps")


def _curvature_deficit_values(u: ScalarField):
    """Vectorized R_g^- e^{2u} = 2(n-1) max(Delta u + (n-2)/2 |grad u|^2, 0).

    The conformal factors cancel exactly, so the criterion integrand never
    overflows even when e^{-2u} itself would."""
    n = u.dim.n
    chain = u.caps.laplacian_chain
    grad = u.caps.gradient
    if chain is not None and grad is not None:
        def deficit(pts):
            lap = np.asarray(chain[0](pts), dtype=float)
            g = np.asarray(grad(pts), dtype=float)
            grad2 = np.einsum("ij,ij->i", g, g)
            return 2.0 * (n - 1) * np.maximum(lap + 0.5 * (n - 2) * grad2, 0.0)

        return deficit
    if u.caps.is_radial:
        phi = u.along_ray()

        def deficit(pts):
            r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
            jet = radial_jet(phi, r, n, max_m=1)
            lap = jet.laplacian_power(1)
            du = jet.radial_derivative()
            return 2.0 * (n - 1) * np.maximum(lap + 0.5 * (n - 2) * du ** 2, 0.0)

        return deficit
    raise QflatError("scalar criterion needs a radial field or analytic caps")


def normality_scalar_criterion(u: ScalarField, radii=None, margin=0.25) -> GrowthVerdict:
    """int_{B_R} R_g^- e^{2u} dx = o(R^n)?  (n >= 4)"""
    n = u.dim.n
    if n < 4:
        raise DimensionError("scalar criterion applies for n >= 4")
    radii = dyadic_radii() if radii is None else np.sort(np.asarray(radii, dtype=float))
    integrand = _curvature_deficit_values(u)

    if u.caps.is_radial:
        phi = u.along_ray()

        def radial_integrand(t):
            t = np.asarray(t, dtype=float)
            pts = np.zeros((t.size, n))
            pts[:, 0] = t
            return integrand(pts)

        vals = _cumulative_radial(radial_integrand, radii, n)
    else:
        vals = _cumulative_shells(integrand, radii, n)
    return growth_classifier(zip(radii, vals), threshold=n, margin=margin)


# ---------------------------------------------------------------------------
# reversed total-curvature bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CohnVossenReport:
    total: float | None
    bound: float
    satisfied: bool | None
    preconditions: dict
    tolerance: float

    def to_json_dict(self):
        return {"total": self.total, "bound": self.bound,
                "satisfied": self.satisfied, "preconditions": dict(self.preconditions),
                "tolerance": self.tolerance}


def _density_radial_callable(ctx: MetricContext):
    """t -> (-Delta)^{n/2} u (t e_1) for radial metrics."""
    if ctx.density is not None and ctx.density.caps.is_radial:
        return ctx.density.along_ray()
    if not ctx.is_radial:
        return None
    phi = ctx.u_radial()
    n = ctx.n
    m = n // 2
    sign = (-1.0) ** m
    return lambda t: sign * radial_laplacian_batch(phi, np.asarray(t, dtype=float), n, m)


def cohn_vossen_check(ctx: MetricContext, tolerance=1e-3, radii=None) -> CohnVossenReport:
    """Total-curvature lower bound for finite-volume metrics.

    total = int Q_g e^{nu} dx is checked against (n-1)! |S^n| / 2 (2 pi in
    n = 2).  Preconditions: finite volume, integrable negative curvature
    part, and for n >= 4 the o(R^n) growth of int_{B_R} |Delta u|.  Any
    failed precondition is reported and the verdict withheld.
    """
    n = ctx.n
    bound = cohn_vossen_bound(n)
    pre = {}
    vol = volume_classification(ctx)
    pre["finite_volume"] = vol.classification
    dens = _density_radial_callable(ctx)
    area = sphere_constants(n).boundary_area
    neg_ok = None
    if dens is not None:
        try:
            decade_mass_integral(
                lambda t: np.maximum(-np.asarray(dens(t), dtype=float), 0.0)
                * area * np.asarray(t) ** (n - 1),
                rel_tol=1e-6, abs_tol=1e-10,
                support_radius=ctx.density.caps.support_radius if ctx.density is not None else None)
            neg_ok = True
        except NonIntegrableError:
            neg_ok = False
    pre["negative_part_integrable"] = neg_ok
    if n >= 4:
        try:
            pre["laplacian_growth"] = normality_condition_a(ctx.u, radii).verdict
        except QflatError as e:
            pre["laplacian_growth"] = f"error: {e}"

    ok = (vol.classification == "finite" and neg_ok is True
          and (n < 4 or pre.get("laplacian_growth") == "little_o"))
    if not ok:
        return CohnVossenReport(total=None, bound=bound, satisfied=None,
                                preconditions=pre, tolerance=tolerance)
    if dens is None:
        pre["density"] = "unavailable"
        return CohnVossenReport(total=None, bound=bound, satisfied=None,
                                preconditions=pre, tolerance=tolerance)
    mass = decade_mass_integral(
        lambda t: np.asarray(dens(t), dtype=float) * area * np.asarray(t) ** (n - 1),
        rel_tol=1e-8, abs_tol=1e-10,
        support_radius=ctx.density.caps.support_radius if ctx.density is not None else None)
    total = mass.value
    return CohnVossenReport(total=total, bound=bound,
                            satisfied=bool(total >= bound - tolerance),
                            preconditions=pre, tolerance=tolerance)


# ---------------------------------------------------------------------------
# decomposition  u = L(f) + P
# ---------------------------------------------------------------------------

@dataclass
class Decomposition:
    polynomial_part: Polynomial
    potential_part: object            # callable (m, n) -> (m,)
    fit_residual: float
    nonconstant: bool
    std_errors: dict
    sample_spec: str

    def coefficient(self, mi):
        return self.polynomial_part.coeffs.get(tuple(mi), 0.0)


def decompose_samples(dim, seed=20250, n_radii=12, per_radius=8,
                      r_min=0.1, r_max=1e3):
    """Deterministic sample set: geometric radii over 4 decades, seeded
    directions (recorded in the report for reproducibility)."""
    n = int(dim)
    rng = np.random.default_rng(seed)
    radii = np.geomspace(r_min, r_max, n_radii)
    pts = []
    for r in radii:
        for _ in range(per_radius):
            d = rng.normal(size=n)
            d /= np.linalg.norm(d)
            pts.append(r * d)
    return np.asarray(pts)


def decompose(w: ScalarField, f: ScalarField, sample_set=None, max_degree=None,
              seed=20250, evaluator=None) -> Decomposition:
    """Least-squares fit of w - L(f) in the monomial basis of degree <=
    max_degree (default n - 2).

    Flags NONCONSTANT when any degree >= 1 coefficient exceeds 10x its fit
    standard error (with a small absolute floor against quadrature noise).
    """
    n = w.dim.n
    if max_degree is None:
        max_degree = n - 2
    pts = decompose_samples(n, seed=seed) if sample_set is None else np.asarray(sample_set)
    basis = monomials_upto(n, max_degree)
    if len(pts) < 3 * len(basis):
        raise QflatError(
            f"underdetermined decomposition: {len(pts)} samples for "
            f"{len(basis)} monomials (need 3x)")
    radii = np.linalg.norm(pts, axis=1)
    if np.max(radii) / max(np.min(radii), 1e-300) < 100.0:
        raise QflatError("decomposition samples must span >= 2 decades of |x|")
    ev = evaluator if evaluator is not None else PotentialEvaluator(f)
    pot = ev(pts)
    y = w(pts) - pot

    cols = np.empty((len(pts), len(basis)))
    for j, mi in enumerate(basis):
        col = np.ones(len(pts))
        for i, k in enumerate(mi):
            if k:
                col = col * pts[:, i] ** k
        cols[:, j] = col
    scale = np.max(np.abs(cols), axis=0)
    scale[scale == 0] = 1.0
    sol, _, _, _ = np.linalg.lstsq(cols / scale, y, rcond=None)
    coeffs = sol / scale
    resid = y - cols @ coeffs
    rms = float(np.sqrt(np.mean(resid ** 2)))
    dof = max(len(pts) - len(basis), 1)
    sigma2 = float(resid @ resid) / dof
    gram_inv = np.linalg.pinv((cols / scale).T @ (cols / scale))
    se = np.sqrt(np.maximum(np.diag(gram_inv), 0.0) * sigma2) / scale

    nonconstant = False
    std_errors = {}
    poly_coeffs = {}
    for j, mi in enumerate(basis):
        poly_coeffs[mi] = float(coeffs[j])
        std_errors[mi] = float(se[j])
        if sum(mi) >= 1 and abs(coeffs[j]) > max(NONCONSTANT_SE_FACTOR * se[j],
                                                 NONCONSTANT_FLOOR):
            nonconstant = True
    return Decomposition(
        polynomial_part=Polynomial(w.dim, poly_coeffs),
        potential_part=ev,
        fit_residual=rms,
        nonconstant=nonconstant,
        std_errors=std_errors,
        sample_spec=f"seed={seed}, {len(pts)} points, radii [{radii.min():g}, {radii.max():g}]",
    )


# ---------------------------------------------------------------------------
# the aggregated report
# ---------------------------------------------------------------------------

@dataclass
class AnalysisConfig:
    seed: int = 20250
    volume_radii: tuple = tuple(np.geomspace(10.0, 1e7, 26))
    distance_radii: tuple = tuple(np.geomspace(10.0, 1e4, 12))
    criterion_radii: tuple = tuple(2.0 ** k for k in range(1, 11))
    margin: float = 0.25
    mass_rel_tol: float = 1e-8
    entropy_stability_gap: float = 0.5
    identity_tolerance: float = 0.05
    cohn_vossen_tolerance: float = 1e-3

    def tolerances(self):
        return {
            "margin": self.margin,
            "mass_rel_tol": self.mass_rel_tol,
            "entropy_stability_gap": self.entropy_stability_gap,
            "identity_tolerance": self.identity_tolerance,
            "cohn_vossen_tolerance": self.cohn_vossen_tolerance,
        }


@dataclass
class NormalityReport:
    n: int
    label: str
    alpha0: float | None
    alpha0_residual: float | None
    tau: GrowthEstimate | None
    identity_residual: float | None
    verdict: str
    criteria: dict
    cohn_vossen: CohnVossenReport | None
    diameter: DiameterReport | None
    volume: DiameterReport | None
    decomposition: dict | None
    completeness: str
    errors: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self):
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return None
            return x

        crit = {}
        for key, val in self.criteria.items():
            crit[key] = val.to_json_dict() if hasattr(val, "to_json_dict") else val
        return {
            "n": self.n,
            "label": self.label,
            "alpha0": clean(self.alpha0),
            "tau": self.tau.to_json_dict() if self.tau is not None else None,
            "identity_residual": clean(self.identity_residual),
            "verdict": self.verdict,
            "criteria": crit,
            "cohn_vossen": self.cohn_vossen.to_json_dict() if self.cohn_vossen else None,
            "diameter": self.diameter.to_json_dict() if self.diameter else None,
            "volume": self.volume.to_json_dict() if self.volume else None,
            "decomposition": self.decomposition,
            "completeness": self.completeness,
            "errors": dict(self.errors),
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_json_dict())


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed separators, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "),
                      allow_nan=False, indent=1)


def _completeness(ctx: MetricContext, seed):
    if ctx.completeness_hint is not None:
        return "assumed_complete" if ctx.completeness_hint else "assumed_incomplete"
    if ctx.is_radial:
        cls = classify_ray(ctx)
        return {"infinite": "complete", "finite": "incomplete"}.get(cls.kind, "unknown")
    rng = np.random.default_rng(seed)
    kinds = set()
    for _ in range(8):
        d = rng.normal(size=ctx.n)
        d /= np.linalg.norm(d)
        kinds.add(classify_ray(ctx, direction=d).kind)
    if kinds == {"infinite"}:
        return "complete_sampled"
    if "finite" in kinds:
        return "incomplete"
    return "unknown"


def analyze_normality(ctx: MetricContext, config: AnalysisConfig | None = None,
                      provenance_spec=None) -> NormalityReport:
    """Full normality analysis of one metric.

    Each sub-computation is attempted independently; failures land in the
    report's error map instead of aborting the run.
    """
    cfg = config or AnalysisConfig()
    errors = {}

    alpha0 = alpha0_res = None
    try:
        if ctx.density is not None:
            est = total_mass_alpha(ctx.density, rel_tol=cfg.mass_rel_tol)
        elif ctx.is_radial:
            n = ctx.n
            dens = _density_radial_callable(ctx)
            f_field = ScalarField(
                dim=ctx.u.dim,
                fn=lambda pts: np.asarray(
                    dens(np.sqrt(np.einsum("ij,ij->i", pts, pts))), dtype=float),
                caps=FieldCaps(is_radial=True),
                name=f"density({ctx.label})")
            est = total_mass_alpha(f_field, rel_tol=cfg.mass_rel_tol)
        else:
            raise QflatError("no curvature density available for a non-radial metric")
        alpha0, alpha0_res = est.alpha_hat, est.residual
    except QflatError as e:
        errors["alpha0"] = str(e)

    tau = None
    try:
        radii = np.asarray(cfg.volume_radii, dtype=float)
        if not ctx.is_radial:
            radii = radii[radii <= 1e4]
        tau = volume_growth(ctx, radii)
    except QflatError as e:
        errors["tau"] = str(e)

    identity_residual = None
    if tau is not None and alpha0 is not None:
        # limsup semantics: when the window split has not settled, the
        # sup-window slope is the headline exponent
        tau_headline = tau.exponent
        if tau.sup_exponent - tau.inf_exponent > cfg.entropy_stability_gap:
            tau_headline = tau.sup_exponent
        identity_residual = abs(tau_headline - max(1.0 - alpha0, 0.0))

    completeness = _completeness(ctx, cfg.seed)

    criteria = {}
    tau_stable = (tau is not None
                  and tau.sup_exponent - tau.inf_exponent <= cfg.entropy_stability_gap
                  and tau.residual <= cfg.entropy_stability_gap)
    if ctx.n == 2:
        # finite total curvature + settled entropy forces a constant
        # remainder directly in n = 2 (degree bound n - 2 = 0)
        entropy_verdict = "normal" if tau_stable else "inconclusive"
    else:
        if not tau_stable:
            entropy_verdict = "inconclusive"
        elif completeness in ("complete", "assumed_complete", "complete_sampled"):
            entropy_verdict = "normal"
        else:
            entropy_verdict = "not_applicable_incomplete"
    criteria["entropy"] = {
        "verdict": entropy_verdict,
        "tau_stable": bool(tau_stable),
        "completeness": completeness,
    }

    for key, fn in (("condition_a", normality_condition_a),
                    ("condition_b", normality_condition_b),
                    ("scalar_criterion", normality_scalar_criterion)):
        if ctx.n < 4:
            criteria[key] = {"verdict": "not_applicable"}
            continue
        try:
            criteria[key] = fn(ctx.u, np.asarray(cfg.criterion_radii), margin=cfg.margin)
        except QflatError as e:
            criteria[key] = {"verdict": "error", "error": str(e)}
            errors[key] = str(e)

    decomposition = None
    if ctx.density is not None and ctx.density_tractable:
        try:
            dec = decompose(ctx.u, ctx.density, seed=cfg.seed)
            decomposition = {
                "residual": dec.fit_residual,
                "nonconstant": dec.nonconstant,
                "constant_term": dec.coefficient((0,) * ctx.n),
                "samples": dec.sample_spec,
            }
        except QflatError as e:
            errors["decomposition"] = str(e)

    cv = None
    try:
        cv = cohn_vossen_check(ctx, tolerance=cfg.cohn_vossen_tolerance,
                               radii=np.asarray(cfg.criterion_radii))
    except QflatError as e:
        errors["cohn_vossen"] = str(e)

    diameter = volume = None
    try:
        diameter = diameter_estimate(ctx)
    except QflatError as e:
        errors["diameter"] = str(e)
    try:
        volume = volume_classification(ctx)
    except QflatError as e:
        errors["volume"] = str(e)

    scalar = criteria.get("scalar_criterion")
    scalar_verdict = scalar.verdict if isinstance(scalar, GrowthVerdict) else None
    if scalar_verdict == "not_little_o":
        verdict = "NOT_NORMAL"
    elif decomposition is not None and decomposition["nonconstant"]:
        verdict = "NOT_NORMAL"
    elif entropy_verdict == "normal":
        verdict = "NORMAL"
    elif scalar_verdict == "little_o":
        verdict = "NORMAL"
    else:
        verdict = "INCONCLUSIVE"

    report = NormalityReport(
        n=ctx.n,
        label=ctx.label,
        alpha0=alpha0,
        alpha0_residual=alpha0_res,
        tau=tau,
        identity_residual=identity_residual,
        verdict=verdict,
        criteria=criteria,
        cohn_vossen=cv,
        diameter=diameter,
        volume=volume,
        decomposition=decomposition,
        completeness=completeness,
        errors=errors,
        provenance={
            "spec": provenance_spec if provenance_spec is not None
            else {"kind": "api", "label": ctx.label},
            "seed": cfg.seed,
            "tolerances": cfg.tolerances(),
        },
    )
    return report
