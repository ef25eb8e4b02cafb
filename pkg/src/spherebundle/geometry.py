"""Chart-level metric evaluation and the frame-indexed curvature engine.

Conventions, fixed once and anchored by tests:

* Curvature sign: R(x, y, x, y) equals the sectional curvature of the plane
  spanned by orthonormal x, y.  The unit round sphere is the normative anchor
  (sec = +1); every formula downstream is transcribed against it.
* Covariant derivatives of R are assembled in chart coordinates (partials of
  the coordinate tensor plus Christoffel contractions) and projected to frame
  indices afterwards, so the frame field itself is never differentiated.
* Ricci: ric_ab = sum_c R_acbc in an orthonormal frame, positive on spheres.

Models are duck-typed: anything with ``dim``, ``metric_scalars(x, chart_id)``,
optionally ``j_scalars``, ``charts`` and ``sample_coords`` works here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Optional

import numpy as np

from .errors import (
    ChartDomainError,
    ConvergenceError,
    DegenerateMetricError,
    DegeneratePlaneError,
    FrameError,
    JetOrderError,
    NotEinsteinError,
)
from .jets import Jet, JetAlgebra, algebra

_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class ChartPoint:
    """A point given by chart label and chart coordinates."""

    chart_id: int
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))


def point(coords, chart_id: int = 0) -> ChartPoint:
    return ChartPoint(chart_id, np.asarray(coords, dtype=float))


@dataclass
class MetricJet:
    """Metric components and their partial derivatives at a point.

    ``derivs[k]`` has shape (n, n) + (n,)*k with the trailing axes the
    differentiation indices (symmetric under their permutations).
    """

    order: int
    g: np.ndarray
    derivs: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass
class Frame:
    """Orthonormal frame, columns = chart components of the frame vectors."""

    vectors: np.ndarray
    adapted: bool

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


@dataclass
class CurvatureData:
    """Frame-indexed curvature at a point.

    ``R[a,b,c,d]`` = R(e_a, e_b, e_c, e_d); ``dR[...,e]`` = (nabla_{e_e} R);
    ``d2R[...,e,f]`` = (nabla^2_{e_f, e_e} R) (outer derivative last).
    """

    point: ChartPoint
    frame: Frame
    R: np.ndarray
    ricci: np.ndarray
    scalar: float
    dR: Optional[np.ndarray] = None
    d2R: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.R.shape[0]


@dataclass
class ChartCurvature:
    """Coordinate-level curvature pieces (mainly for oracles and transport)."""

    point: ChartPoint
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray          # gamma[k,i,j] = Gamma^k_ij
    R: np.ndarray              # coordinate R_ijkl, same sign convention
    dR: Optional[np.ndarray] = None
    d2R: Optional[np.ndarray] = None
    dgamma: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# metric jets
# ---------------------------------------------------------------------------

def _check_point(model, pt: ChartPoint):
    chart = model.charts[pt.chart_id]
    if np.linalg.norm(pt.coords) > chart.radius:
        raise ChartDomainError(
            f"point at radius {np.linalg.norm(pt.coords):.3g} outside chart "
            f"{pt.chart_id} validity ball (radius {chart.radius:.3g})")


def _pack(alg: JetAlgebra, rows) -> np.ndarray:
    """Nested list of Jets/floats -> raw coefficient array (n, n, size)."""
    n = len(rows)
    out = np.zeros((n, n, alg.size))
    for i in range(n):
        for j in range(n):
            e = rows[i][j]
            if isinstance(e, Jet):
                out[i, j] = e.data
            else:
                out[i, j, 0] = float(e)
    return out


def metric_jet(model, pt: ChartPoint, order: int) -> MetricJet:
    """Metric and its partials up to ``order`` via jet evaluation (exact)."""
    if order > 4:
        raise JetOrderError(f"metric jets support order <= 4, got {order}")
    _check_point(model, pt)
    n = model.dim
    alg = algebra(n, order)
    xs = Jet.variables(alg, pt.coords)
    G = _pack(alg, model.metric_scalars(xs, pt.chart_id))
    g0 = alg.value(G)
    _assert_spd(g0, pt)
    derivs = {k: alg.extract(G, k) for k in range(1, order + 1)}
    return MetricJet(order=order, g=g0, derivs=derivs)


def _assert_spd(g0: np.ndarray, pt: ChartPoint):
    try:
        np.linalg.cholesky(g0)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError(f"metric not positive definite at {pt.coords}") from None


def finite_difference_metric_jet(metric_fn, coords, order: int,
                                 step: float = 1e-3) -> MetricJet:
    """Richardson-extrapolated central differences for black-box metrics.

    Two extrapolation levels (h and h/2).  Useful to cross-check evaluators or
    to handle metrics not written over jet scalars; rounding noise grows as
    roughly eps/h^k, so orders above 2 are increasingly approximate.
    """
    coords = np.asarray(coords, dtype=float)

    def partial(x, dirs):
        if not dirs:
            return np.asarray(metric_fn(x), dtype=float)
        i, rest = dirs[0], dirs[1:]

        def central(h):
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            return (partial(xp, rest) - partial(xm, rest)) / (2.0 * h)

        return (4.0 * central(step / 2.0) - central(step)) / 3.0

    n = len(coords)
    g = partial(coords, ())
    derivs: dict[int, np.ndarray] = {}
    for k in range(1, order + 1):
        out = np.zeros((n, n) + (n,) * k)
        for combo in np.ndindex(*(n,) * k):
            if tuple(sorted(combo)) != combo:
                continue  # fill symmetric images from the sorted representative
            val = partial(coords, tuple(combo))
            for perm in set(permutations(combo)):
                out[(Ellipsis,) + perm] = val
        derivs[k] = out
    return MetricJet(order=order, g=g, derivs=derivs)


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------

def build_frame(model, pt: ChartPoint, seed_vector=None) -> Frame:
    """Orthonormal frame at ``pt``; adapted (e_2k = J e_2k-1) when J exists.

    Gram--Schmidt over (seed, J seed, remaining chart directions), with a
    second orthogonalization pass on each new candidate.  Seedless frames
    start from the chart direction of smallest index not yet spanned.
    """
    _check_point(model, pt)
    n = model.dim
    g = np.asarray(model.metric_scalars(list(pt.coords), pt.chart_id), dtype=float)
    _assert_spd(g, pt)
    J = model.j_value(pt) if model.has_j else None

    def norm(v):
        return float(np.sqrt(v @ g @ v))

    def orthogonalize(v, cols):
        for _ in range(2):  # twice is enough
            for u in cols:
                v = v - (u @ g @ v) * u
        return v

    cols: list[np.ndarray] = []
    candidates = []
    if seed_vector is not None:
        seed_vector = np.asarray(seed_vector, dtype=float)
        if norm(seed_vector) < 1e-12:
            raise FrameError("seed vector is numerically zero")
        candidates.append(seed_vector)
    candidates.extend(np.eye(n))

    ci = 0
    while len(cols) < n:
        if ci >= len(candidates):
            raise FrameError("candidate directions exhausted; degenerate metric?")
        w = orthogonalize(candidates[ci].copy(), cols)
        ci += 1
        if norm(w) < 1e-10:
            continue
        u = w / norm(w)
        cols.append(u)
        if J is not None:
            v = J @ u
            nv = norm(v)
            if nv < 1e-12:
                raise FrameError("J maps a unit vector to ~0; incompatible J")
            v = v / nv
            if max(abs(v @ g @ c) for c in cols) > 1e-8:
                raise FrameError("J-image of frame vector not orthogonal to span")
            cols.append(v)

    E = np.column_stack(cols)
    gram = E.T @ g @ E
    if np.max(np.abs(gram - np.eye(n))) > 1e-9:
        raise FrameError(f"frame failed orthonormality, defect {np.max(np.abs(gram - np.eye(n))):.2e}")
    return Frame(vectors=E, adapted=J is not None)


def frame_j(model, pt: ChartPoint, frame: Frame) -> np.ndarray:
    """Frame components of J: column i = components of J e_i in the frame."""
    J = model.j_value(pt)
    g = np.asarray(model.metric_scalars(list(pt.coords), pt.chart_id), dtype=float)
    E = frame.vectors
    # <J e_i, e_a>_g gives the component since the frame is orthonormal
    return E.T @ g @ J @ E


def is_adapted(Jf: np.ndarray, tol: float = 1e-8) -> bool:
    n = Jf.shape[0]
    std = standard_j(n)
    return bool(np.max(np.abs(Jf - std)) <= tol)


def standard_j(n: int) -> np.ndarray:
    """Block rotation sending e_1 -> e_2, e_2 -> -e_1, etc."""
    if n % 2:
        raise ValueError("standard J needs even dimension")
    J = np.zeros((n, n))
    for k in range(n // 2):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def _jmatmul(alg: JetAlgebra, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    out = alg.zeros((n, n))
    for k in range(n):
        out += alg.mul(A[:, k, None, :], B[None, k, :, :])
    return out


def _jet_inverse(alg: JetAlgebra, G: np.ndarray) -> np.ndarray:
    """Inverse of a jet matrix via the Neumann series (nilpotent part)."""
    n = G.shape[0]
    g0 = alg.value(G)
    g0inv = np.linalg.inv(g0)
    N = G.copy()
    N[..., 0] = 0.0
    X = -np.tensordot(g0inv, N, axes=(1, 0))  # (n, n, size)
    acc = alg.constant(0.0, (n, n))
    acc[..., 0] = np.eye(n)
    term = acc.copy()
    for _ in range(alg.order):
        term = _jmatmul(alg, term, X)
        acc = acc + term
    return _right_mul(alg, acc, g0inv)


def _right_mul(alg: JetAlgebra, A: np.ndarray, m0: np.ndarray) -> np.ndarray:
    """Jet matrix times a constant float matrix."""
    return np.einsum("ik...,kj->ij...", A, m0)


def chart_curvature(model, pt: ChartPoint, deriv_order: int = 0) -> ChartCurvature:
    """Coordinate-index curvature with optional covariant derivatives."""
    if deriv_order not in (0, 1, 2):
        raise JetOrderError("deriv_order must be 0, 1 or 2")
    _check_point(model, pt)
    n = model.dim
    m = deriv_order + 2
    alg = algebra(n, m)
    xs = Jet.variables(alg, pt.coords)
    G = _pack(alg, model.metric_scalars(xs, pt.chart_id))
    g0 = alg.value(G)
    _assert_spd(g0, pt)
    Ginv = _jet_inverse(alg, G)

    D = alg.diff_all(G)                          # D[a,b,c] = d_c g_ab
    S = np.transpose(D, (0, 2, 1, 3)) + D - np.transpose(D, (2, 0, 1, 3))
    Gamma = alg.zeros((n, n, n))
    for l in range(n):
        Gamma += alg.mul(Ginv[:, l, None, None, :], S[l][None, :, :, :])
    Gamma *= 0.5

    dGamma = alg.diff_all(Gamma)                 # dGamma[k,i,j,m] = d_m Gamma^k_ij

    # standard R(d_i, d_j)d_k = Rup[m,i,j,k] d_m
    Rup = np.transpose(dGamma, (0, 3, 1, 2, 4)).copy()
    Rup -= np.transpose(Rup, (0, 2, 1, 3, 4))
    GG = alg.zeros((n, n, n, n))
    for p in range(n):
        GG += alg.mul(Gamma[:, :, p][:, :, None, None, :], Gamma[p][None, None, :, :, :])
    Rup += GG - np.transpose(GG, (0, 2, 1, 3, 4))

    Rlow = alg.zeros((n, n, n, n))
    for mm in range(n):
        Rlow += alg.mul(Rup[mm][:, :, :, None, :], G[mm][None, None, None, :, :])
    # sign convention: R(x,y,x,y) = +sec for orthonormal x, y
    Rj = -Rlow

    R0 = alg.value(Rj)
    gamma0 = alg.value(Gamma)
    out = ChartCurvature(point=pt, g=g0, ginv=alg.value(Ginv), gamma=gamma0, R=R0)
    if deriv_order >= 1:
        dRc = alg.extract(Rj, 1)                 # (n,n,n,n, n): last = partial index
        dgamma0 = alg.extract(Gamma, 1)          # gamma[k,i,j, m] = d_m Gamma^k_ij
        out.dgamma = dgamma0
        T = dRc.transpose(4, 0, 1, 2, 3)         # T[m,ijkl] = d_m R_ijkl
        T = T - np.einsum("pmi,pjkl->mijkl", gamma0, R0)
        T = T - np.einsum("pmj,ipkl->mijkl", gamma0, R0)
        T = T - np.einsum("pmk,ijpl->mijkl", gamma0, R0)
        T = T - np.einsum("pml,ijkp->mijkl", gamma0, R0)
        out.dR = T.transpose(1, 2, 3, 4, 0)      # dR[ijkl, m] = (nabla_m R)_ijkl
    if deriv_order >= 2:
        d2Rc = alg.extract(Rj, 2)                # (n^4, m, nn): d_m d_nn R
        dgamma0 = out.dgamma
        dR = out.dR
        R = R0
        # dT[n, m, ijkl] = d_n ( T[m, ijkl] )
        dT = d2Rc.transpose(5, 4, 0, 1, 2, 3).copy()
        dT -= np.einsum("pmin,pjkl->nmijkl", dgamma0, R) + np.einsum("pmi,pjkln->nmijkl", gamma0, dRc)
        dT -= np.einsum("pmjn,ipkl->nmijkl", dgamma0, R) + np.einsum("pmj,ipkln->nmijkl", gamma0, dRc)
        dT -= np.einsum("pmkn,ijpl->nmijkl", dgamma0, R) + np.einsum("pmk,ijpln->nmijkl", gamma0, dRc)
        dT -= np.einsum("pmln,ijkp->nmijkl", dgamma0, R) + np.einsum("pml,ijkpn->nmijkl", gamma0, dRc)
        Tm = dR.transpose(4, 0, 1, 2, 3)         # T[m, ijkl]
        U = dT
        U = U - np.einsum("pni,mpjkl->nmijkl", gamma0, Tm)
        U = U - np.einsum("pnj,mipkl->nmijkl", gamma0, Tm)
        U = U - np.einsum("pnk,mijpl->nmijkl", gamma0, Tm)
        U = U - np.einsum("pnl,mijkp->nmijkl", gamma0, Tm)
        U = U - np.einsum("pnm,pijkl->nmijkl", gamma0, Tm)
        # d2R[ijkl, m, n] = (nabla^2_{n,m} R)_ijkl  (n = outer derivative)
        out.d2R = U.transpose(2, 3, 4, 5, 1, 0)
    return out


def curvature(model, pt: ChartPoint, deriv_order: int = 0,
              seed_vector=None, frame: Optional[Frame] = None) -> CurvatureData:
    """Frame-indexed curvature; see :class:`CurvatureData` for index layout."""
    cc = chart_curvature(model, pt, deriv_order)
    if frame is None:
        frame = build_frame(model, pt, seed_vector)
    E = frame.vectors
    Rf = np.einsum("ia,jb,kc,ld,ijkl->abcd", E, E, E, E, cc.R, optimize=True)
    data = CurvatureData(point=pt, frame=frame, R=Rf,
                         ricci=np.einsum("acbc->ab", Rf),
                         scalar=float(np.einsum("abab->", Rf)))
    if cc.dR is not None:
        data.dR = np.einsum("ia,jb,kc,ld,me,ijklm->abcde", E, E, E, E, E, cc.dR, optimize=True)
    if cc.d2R is not None:
        data.d2R = np.einsum("ia,jb,kc,ld,me,nf,ijklmn->abcdef",
                             E, E, E, E, E, E, cc.d2R, optimize=True)
    return data


def sectional(curv: CurvatureData, x, y) -> float:
    """Sectional curvature of span{x, y}, vectors in frame components."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    den = (x @ x) * (y @ y) - (x @ y) ** 2
    scale = max((x @ x) * (y @ y), 1e-300)
    if den <= 1e-12 * scale:
        raise DegeneratePlaneError("vectors are (numerically) linearly dependent")
    num = np.einsum("abcd,a,b,c,d->", curv.R, x, y, x, y)
    return float(num / den)


# ---------------------------------------------------------------------------
# Einstein detection and curvature extremes
# ---------------------------------------------------------------------------

def einstein_constant(model, sample_count: int = 8, tol: float = 1e-8,
                      rng: Optional[np.random.Generator] = None) -> float:
    """Einstein constant, or :class:`NotEinsteinError` with the worst witness.

    The constant is estimated as the mean of tr(ric)/n over samples before the
    deviation test, which makes it robust to per-point rounding.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = rng or np.random.default_rng(0)
    pts = [model.sample_point(rng) for _ in range(sample_count)]
    datas = [curvature(model, p, 0) for p in pts]
    n = model.dim
    lam = float(np.mean([d.scalar / n for d in datas]))
    worst, witness = 0.0, None
    for p, d in zip(pts, datas):
        dev = float(np.max(np.abs(d.ricci - lam * np.eye(n))))
        if dev > worst:
            worst, witness = dev, p
    if worst > tol:
        raise NotEinsteinError(worst, witness.coords if witness else None)
    return lam


def _ascend_plane(R: np.ndarray, q: np.ndarray, sign: float,
                  grad_tol: float = 1e-8, iter_cap: int = 500) -> float:
    """Projected gradient ascent of sign*sec over the Grassmannian of 2-planes.

    The projection removes the in-plane rotation component (along which sec is
    constant); steps must clear an Armijo sufficient-increase bar, otherwise a
    barely-improving overshoot can stall the iteration across the ridge.
    """

    def f(Q):
        return sign * np.einsum("abcd,a,b,c,d->", R, Q[:, 0], Q[:, 1], Q[:, 0], Q[:, 1])

    def grad(Q):
        g1 = 2 * sign * np.einsum("abcd,b,c,d->a", R, Q[:, 1], Q[:, 0], Q[:, 1])
        g2 = 2 * sign * np.einsum("abcd,a,c,d->b", R, Q[:, 0], Q[:, 0], Q[:, 1])
        return np.column_stack([g1, g2])

    Q, _ = np.linalg.qr(q)
    val = f(Q)
    step = 0.5
    for _ in range(iter_cap):
        G = grad(Q)
        PG = G - Q @ (Q.T @ G)
        gn2 = float(np.sum(PG * PG))
        if np.sqrt(gn2) < grad_tol:
            return val
        while step > 1e-14:
            Qn, _ = np.linalg.qr(Q + step * PG)
            vn = f(Qn)
            if vn >= val + 0.25 * step * gn2:
                Q, val = Qn, vn
                step = min(step * 2.0, 1.0)
                break
            step *= 0.5
        else:
            return val
    return val


def max_abs_sec(model, restarts: int = 64, sample_points: int = 8,
                rng: Optional[np.random.Generator] = None,
                iter_cap: int = 500) -> float:
    """Estimate max |sec| over all 2-planes by multi-start projected ascent.

    Monotone in ``restarts``: every restart can only raise the running max.
    """
    rng = rng or np.random.default_rng(0)
    n = model.dim
    best = 0.0
    converged_any = False
    for _ in range(sample_points):
        p = model.sample_point(rng)
        R = curvature(model, p, 0).R
        for _ in range(max(1, restarts // sample_points)):
            q = rng.standard_normal((n, 2))
            for sign in (1.0, -1.0):
                try:
                    v = _ascend_plane(R, q, sign, iter_cap=iter_cap)
                    converged_any = True
                except np.linalg.LinAlgError:
                    continue
                best = max(best, abs(v))
    if not converged_any:
        raise ConvergenceError("no ascent run converged")
    return best
