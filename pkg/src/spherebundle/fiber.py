"""Fiber calculus: exact sphere integrals of curvature polynomials.

Averages of the holomorphic sectional curvature over unit-sphere fibers,
the homogeneous-polynomial Laplacian identity, variance statistics and the
Rayleigh-quotient bound check.  All integrals go through exact monomial
moments; fiber maxima use multi-start projected gradient ascent.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (ConstantHError, ConvergenceError, DegenerateRatioError,
                     ModelSpecError, NotNormalizedError)
from .geometry import ChartPoint, einstein_constant, max_abs_sec
from .hermitian import HermitianData, QuarticForm, hermitian_data, star_curvature
from .moments import fiber_average, integrate_fiber
from .polynomials import SymPoly
from .report import VerificationReport


@dataclass
class FiberStats:
    h_av: float
    h_max: float
    variance: float
    gradv_sq_integral: float


# ---------------------------------------------------------------------------
# polynomial building blocks
# ---------------------------------------------------------------------------

def vertical_gradient_sq_average(form: QuarticForm) -> float:
    """Exact fiber average of |grad^v H|^2.

    On the unit sphere |grad^v H|^2 = 16 (sum_m (W x^3)_m^2 - F^2): the full
    ambient gradient squared minus its radial part.
    """
    n = form.dim
    cubics = [SymPoly.from_symmetric_tensor(form.W[..., i], 3) for i in range(n)]
    F = form.poly()
    total = sum((c * c for c in cubics), SymPoly.constant(n, 0.0))
    return 16.0 * (fiber_average(total) - fiber_average(F * F))


def _stats_core(form: QuarticForm) -> tuple[float, float, float]:
    F = form.poly()
    h_av = fiber_average(F)
    f2_av = fiber_average(F * F)
    variance = f2_av - h_av * h_av
    return h_av, f2_av, variance


# ---------------------------------------------------------------------------
# fiber optimization
# ---------------------------------------------------------------------------

def fiber_max(form: QuarticForm, restarts: int = 32,
              rng: Optional[np.random.Generator] = None,
              grad_tol: float = 1e-10, iter_cap: int = 800,
              return_argmax: bool = False):
    """Maximum of F over the unit fiber sphere by projected gradient ascent.

    Monotone in ``restarts``; starts include the frame axes plus random
    directions.
    """
    rng = rng or np.random.default_rng(0)
    n = form.dim
    starts = [np.eye(n)[i] for i in range(n)]
    starts += [rng.standard_normal(n) for _ in range(max(0, restarts - n))]
    best, best_x = -np.inf, None
    converged = False
    for x0 in starts:
        x = x0 / np.linalg.norm(x0)
        val = form(x)
        step = 0.5
        for _ in range(iter_cap):
            g = form.gradient(x)
            r = g - (g @ x) * x
            rn2 = float(r @ r)
            if np.sqrt(rn2) < grad_tol:
                converged = True
                break
            while step > 1e-16:
                xn = x + step * r
                xn /= np.linalg.norm(xn)
                vn = form(xn)
                if vn >= val + 0.25 * step * rn2:
                    x, val = xn, vn
                    step = min(2.0 * step, 1.0)
                    break
                step *= 0.5
            else:
                converged = True
                break
        if val > best:
            best, best_x = val, x
    if not converged:
        raise ConvergenceError("fiber ascent hit the iteration cap on every start")
    if return_argmax:
        return best, best_x
    return best


def h_stats(model, pt: Optional[ChartPoint] = None, restarts: int = 32,
            rng: Optional[np.random.Generator] = None,
            hd: Optional[HermitianData] = None) -> FiberStats:
    """Exact fiber statistics of H at a point (raw; no Einstein assumption)."""
    if hd is None:
        hd = hermitian_data(model, pt, rng=rng)
    h_av, _, variance = _stats_core(hd.quartic)
    gv = vertical_gradient_sq_average(hd.quartic)
    hmax = fiber_max(hd.quartic, restarts=restarts, rng=rng)
    return FiberStats(h_av=h_av, h_max=hmax, variance=variance, gradv_sq_integral=gv)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------

def _model_einstein(model, rng=None) -> float:
    if model.einstein_const is not None:
        return model.einstein_const
    return einstein_constant(model, sample_count=5, tol=1e-8, rng=rng)


def berger_average_check(model, pt: Optional[ChartPoint] = None, tol: float = 1e-9,
                         rng: Optional[np.random.Generator] = None,
                         hd: Optional[HermitianData] = None) -> list[VerificationReport]:
    """Fiber average of H against the star-scalar combination (3s* + s)/(4N(N+1)).

    For Kaehler models the average is additionally compared with s/(N(N+1)).
    Both comparisons are per unit fiber measure.
    """
    t0 = time.perf_counter()
    if not model.has_j:
        raise ModelSpecError(f"{model.name} is not almost-Hermitian")
    if hd is None:
        hd = hermitian_data(model, pt, rng=rng)
    n = model.dim
    N = n // 2
    avg = fiber_average(hd.quartic.poly())
    star = star_curvature(hd.curv, hd.jf)
    s = hd.curv.scalar
    ms = (time.perf_counter() - t0) * 1e3
    coords = list(hd.point.coords)
    reports = [VerificationReport(
        identity="fiber-average-vs-star-scalar", model=model.name,
        lhs=avg, rhs=(3.0 * star.star_scalar + s) / (4.0 * N * (N + 1)),
        tol=tol, point=coords, runtime_ms=ms,
        note=f"s={s:.6g} s*={star.star_scalar:.6g}")]
    if model.kaehler:
        reports.append(VerificationReport(
            identity="fiber-average-vs-scalar", model=model.name,
            lhs=avg, rhs=s / (N * (N + 1)), tol=tol, point=coords, runtime_ms=ms))
    return reports


def sphere_laplacian_identity_check(poly: SymPoly, degree: int, n: int,
                                    tol: float = 1e-9,
                                    label: str = "ambient") -> VerificationReport:
    """For homogeneous f of degree r: integral of the ambient Laplacian of f
    over S^{n-1} equals r(n+r-2) times the integral of f."""
    t0 = time.perf_counter()
    if degree < 1 or not poly.is_homogeneous(degree):
        raise ValueError(f"polynomial is not homogeneous of degree {degree}")
    with warnings.catch_warnings():
        # odd degrees are legitimate here; both sides vanish by symmetry
        warnings.simplefilter("ignore")
        lhs = integrate_fiber(poly.laplacian(), n)
        rhs = degree * (n + degree - 2) * integrate_fiber(poly, n)
    return VerificationReport(
        identity="sphere-laplacian-degree", model=label, lhs=lhs, rhs=rhs,
        tol=tol, note=f"r={degree} n={n}",
        runtime_ms=(time.perf_counter() - t0) * 1e3)


def einstein_fiber_checks(model, pt: Optional[ChartPoint] = None, tol: float = 1e-9,
                          rng: Optional[np.random.Generator] = None,
                          hd: Optional[HermitianData] = None) -> list[VerificationReport]:
    """Kaehler-Einstein fiber facts: H_av = 4 Lambda/(n+2), ambient Lap H = 16 Lambda."""
    t0 = time.perf_counter()
    rng = rng or np.random.default_rng(0)
    lam = _model_einstein(model, rng)
    if hd is None:
        hd = hermitian_data(model, pt, rng=rng)
    n = model.dim
    h_av, _, _ = _stats_core(hd.quartic)
    lap = hd.quartic.poly().laplacian()
    worst, lhs_worst = -1.0, 16.0 * lam
    for k in range(8):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        val = lap(v)
        if abs(val - 16.0 * lam) > worst:
            worst, lhs_worst = abs(val - 16.0 * lam), val
    ms = (time.perf_counter() - t0) * 1e3
    coords = list(hd.point.coords)
    return [
        VerificationReport(identity="fiber-average-vs-einstein", model=model.name,
                           lhs=h_av, rhs=4.0 * lam / (n + 2), tol=tol,
                           point=coords, runtime_ms=ms),
        VerificationReport(identity="ambient-laplacian-vs-einstein", model=model.name,
                           lhs=lhs_worst, rhs=16.0 * lam, tol=tol,
                           point=coords, runtime_ms=ms,
                           note="worst of 8 random unit fiber directions"),
    ]


def variance_identity_check(model, pt: Optional[ChartPoint] = None, tol: float = 1e-9,
                            rng: Optional[np.random.Generator] = None,
                            hd: Optional[HermitianData] = None) -> VerificationReport:
    """Fiber variance of H equals (1/(4(n+2))) times the |grad^v H|^2 average."""
    t0 = time.perf_counter()
    rng = rng or np.random.default_rng(0)
    _model_einstein(model, rng)  # precondition: Einstein
    if hd is None:
        hd = hermitian_data(model, pt, rng=rng)
    n = model.dim
    _, _, variance = _stats_core(hd.quartic)
    gv = vertical_gradient_sq_average(hd.quartic)
    return VerificationReport(
        identity="fiber-variance-identity", model=model.name,
        lhs=variance, rhs=gv / (4.0 * (n + 2)), tol=tol,
        point=list(hd.point.coords),
        runtime_ms=(time.perf_counter() - t0) * 1e3)


def check_homogeneous_fiber(model, rng, samples: int = 5, spread_tol: float = 1e-8):
    """Gate for global (base-integrated) checks: fiber data point-independent."""
    if not model.homogeneous:
        raise ModelSpecError(f"{model.name} is not declared homogeneous; "
                             "global fiber integrals need point-independence")
    vals = []
    for _ in range(samples):
        hd = hermitian_data(model, model.sample_point(rng))
        vals.append(fiber_average(hd.quartic.poly()))
    spread = max(vals) - min(vals)
    if spread > spread_tol:
        raise ModelSpecError(f"{model.name}: fiber average varies by {spread:.2e} "
                             "across points; homogeneity check failed")


def horizontal_gradient_sq_average(hd: HermitianData) -> float:
    """Exact fiber average of |grad^h H|^2 (degree-8 moment integral)."""
    from .gray import horizontal_gradient_polys  # local: gray imports fiber

    polys = horizontal_gradient_polys(hd)
    n = hd.dim
    total = sum((p * p for p in polys), SymPoly.constant(n, 0.0))
    return fiber_average(total)


def rayleigh_check(model, tol: float = 1e-8,
                   rng: Optional[np.random.Generator] = None,
                   restarts: int = 64) -> list[VerificationReport]:
    """Rayleigh-quotient bound for H as a test function on the sphere bundle.

    Q = (avg|grad^h H|^2 + avg|grad^v H|^2) / avg (H - H_av)^2, computed
    fiberwise with exact moments; base integration cancels on homogeneous
    models.  Requires a normalized, non-space-form Kaehler-Einstein model.
    """
    t0 = time.perf_counter()
    rng = rng or np.random.default_rng(0)
    _model_einstein(model, rng)
    check_homogeneous_fiber(model, rng)

    msec = max_abs_sec(model, restarts=restarts, rng=rng)
    if abs(msec - 1.0) > 1e-4:
        raise NotNormalizedError(f"{model.name}: max |sec| = {msec:.6f}, not 1; "
                                 "normalize the model first")

    pt = model.sample_point(rng)
    hd = hermitian_data(model, pt, deriv_order=1, with_nabla_j=True, rng=rng)
    h_av, _, variance = _stats_core(hd.quartic)
    if variance <= 1e-12 * max(1.0, h_av * h_av):
        raise ConstantHError(f"{model.name}: H is constant on fibers "
                             "(complex space form); the quotient is undefined")
    gv = vertical_gradient_sq_average(hd.quartic)
    gh = horizontal_gradient_sq_average(hd)
    n = model.dim
    Q = (gh + gv) / variance
    bound = 6.0 * (n + 2)
    ms = (time.perf_counter() - t0) * 1e3
    coords = list(pt.coords)
    return [
        VerificationReport(identity="rayleigh-quotient", model=model.name,
                           lhs=Q, rhs=4.0 * (n + 2), tol=tol, point=coords,
                           runtime_ms=ms,
                           note=f"horizontal term {gh:.3e}; vanishing on symmetric models"),
        VerificationReport(identity="rayleigh-bound", model=model.name,
                           lhs=max(Q - bound, 0.0), rhs=0.0, tol=tol, point=coords,
                           runtime_ms=ms, note=f"Q = {Q:.9g} <= {bound:g}"),
        VerificationReport(identity="rayleigh-step-horizontal", model=model.name,
                           lhs=max(gh - 0.5 * msec * gv, 0.0), rhs=0.0, tol=tol,
                           point=coords, runtime_ms=ms,
                           note=f"avg|grad^h H|^2 = {gh:.3e} <= (1/2) max|sec| avg|grad^v H|^2 = {0.5 * msec * gv:.6g}"),
        VerificationReport(identity="rayleigh-step-variance", model=model.name,
                           lhs=variance, rhs=gv / (4.0 * (n + 2)), tol=tol,
                           point=coords, runtime_ms=ms),
    ]


def avg_max_ratio_check(model, points: int = 10, tol: float = 1e-6,
                        rng: Optional[np.random.Generator] = None,
                        restarts: int = 32) -> list[VerificationReport]:
    """Ratio H_av / H_max at sample points against 2/3.

    The 2/3 value characterizes the product of two projective lines among
    positive Kaehler-Einstein surfaces; other models report their honest
    ratio (1 for constant-H space forms) and fail the equality.
    """
    rng = rng or np.random.default_rng(0)
    lam = _model_einstein(model, rng)
    if model.dim != 4:
        raise ModelSpecError("the average-to-maximum ratio check is for real dimension 4")
    if model.flat:
        raise DegenerateRatioError(f"{model.name}: fiber maximum of H is zero")
    if lam <= 0:
        raise ModelSpecError("the average-to-maximum ratio check needs positive "
                             f"Einstein constant, got {lam:.3g}")
    reports = []
    for _ in range(points):
        t0 = time.perf_counter()
        pt = model.sample_point(rng)
        hd = hermitian_data(model, pt)
        h_av, _, _ = _stats_core(hd.quartic)
        hmax = fiber_max(hd.quartic, restarts=restarts, rng=rng)
        if abs(hmax) < 1e-9:
            raise DegenerateRatioError(f"{model.name}: fiber maximum of H is zero")
        reports.append(VerificationReport(
            identity="average-to-max-ratio", model=model.name,
            lhs=h_av / hmax, rhs=2.0 / 3.0, tol=tol, point=list(pt.coords),
            runtime_ms=(time.perf_counter() - t0) * 1e3,
            note=f"H_av={h_av:.9g} H_max={hmax:.9g}"))
    return reports
