"""Almost-complex structures and the curvature quantities twisted by them.

All starred-index formulas are evaluated only in adapted frames
(e_2k = J e_2k-1), which turns the index-star into the constant block
rotation matrix and removes any ambiguity from the bookkeeping.  The
star-Ricci contraction implemented here is

    R*_ij = sum_a R(e_a, J e_i, e_j, J e_a),

exactly as displayed, not the more common literature variant; the two agree
in the Kaehler case.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Optional

import numpy as np

from .errors import FrameError
from .geometry import (ChartPoint, CurvatureData, Frame, build_frame,
                       chart_curvature, curvature, frame_j, is_adapted)
from .jets import Jet, algebra
from .polynomials import SymPoly


@dataclass
class ComplexStructureField:
    """Chart components of J at a point together with first partials."""

    j: np.ndarray        # J^a_b
    dj: np.ndarray       # dj[a,b,c] = d_c J^a_b


@dataclass
class QuarticForm:
    """Fully symmetric coefficients W of v -> R(v, Jv, v, Jv)."""

    W: np.ndarray

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    def poly(self) -> SymPoly:
        return SymPoly.from_symmetric_tensor(self.W, 4)

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.einsum("ijkl,i,j,k,l->", self.W, v, v, v, v))

    def gradient(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return 4.0 * np.einsum("ijkl,j,k,l->i", self.W, v, v, v)

    def hessian(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return 12.0 * np.einsum("ijkl,k,l->ij", self.W, v, v)


@dataclass
class StarCurvature:
    star_ricci: np.ndarray
    star_scalar: float


@dataclass
class HermitianData:
    """Everything the fiber/bundle calculus needs at one (point, frame)."""

    model: object
    point: ChartPoint
    curv: CurvatureData
    jf: np.ndarray                      # frame components of J
    quartic: QuarticForm
    nabla_j: Optional[np.ndarray] = None  # frame (nabla J)[i,j,k]: component i of (nabla_k J)e_j

    @property
    def dim(self) -> int:
        return self.curv.dim


# ---------------------------------------------------------------------------
# pointwise curvature functions
# ---------------------------------------------------------------------------

def holomorphic_sec(curv: CurvatureData, jf: np.ndarray, x) -> float:
    """H(x) = R(x, Jx, x, Jx) for unit x (frame components)."""
    x = np.asarray(x, dtype=float)
    if abs(x @ x - 1.0) > 1e-8:
        raise ValueError(f"holomorphic_sec needs a unit vector, |x|^2 = {x @ x:.6f}")
    jx = jf @ x
    return float(np.einsum("abcd,a,b,c,d->", curv.R, x, jx, x, jx))


def bisectional(curv: CurvatureData, jf: np.ndarray, x, y) -> float:
    """B(x, y) = R(x, Jx, y, Jy) for unit x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if abs(x @ x - 1.0) > 1e-8 or abs(y @ y - 1.0) > 1e-8:
        raise ValueError("bisectional needs unit vectors")
    return float(np.einsum("abcd,a,b,c,d->", curv.R, x, jf @ x, y, jf @ y))


def quartic_form(curv: CurvatureData, jf: np.ndarray, check: bool = True) -> QuarticForm:
    """Symmetrized coefficient array of v -> R(v, Jv, v, Jv).

    The raw coefficient tensor is symmetrized over all 24 index orders;
    downstream moment integration consumes only the symmetric form.  The
    result is verified against direct evaluation at a few vectors.
    """
    n = curv.dim
    T = np.einsum("ijkl,ja,lb->iakb", curv.R, jf, jf)
    W = np.zeros_like(T)
    for perm in permutations(range(4)):
        W += np.transpose(T, perm)
    W /= 24.0
    form = QuarticForm(W)
    if check:
        rng = np.random.default_rng(12345)
        for _ in range(8):
            v = rng.standard_normal(n)
            jv = jf @ v
            direct = float(np.einsum("abcd,a,b,c,d->", curv.R, v, jv, v, jv))
            if abs(form(v) - direct) > 1e-10 * max(1.0, abs(direct)):
                raise FrameError("quartic form failed to reproduce direct evaluation")
    return form


def star_curvature(curv: CurvatureData, jf: np.ndarray) -> StarCurvature:
    """Star-Ricci R*_ij = sum_a R(e_a, Je_i, e_j, Je_a) and its trace."""
    if not is_adapted(jf):
        raise FrameError("star curvature requires an adapted frame")
    star = np.einsum("apjq,pi,qa->ij", curv.R, jf, jf)
    return StarCurvature(star_ricci=star, star_scalar=float(np.trace(star)))


# ---------------------------------------------------------------------------
# J through jets
# ---------------------------------------------------------------------------

def complex_structure_jet(model, pt: ChartPoint) -> ComplexStructureField:
    """J and its first chart partials at a point."""
    n = model.dim
    alg = algebra(n, 1)
    xs = Jet.variables(alg, pt.coords)
    rows = model.j_scalars(xs, pt.chart_id)
    j = np.zeros((n, n))
    dj = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            e = rows[a][b]
            if isinstance(e, Jet):
                j[a, b] = e.value
                for c in range(n):
                    alpha = tuple(1 if m == c else 0 for m in range(n))
                    dj[a, b, c] = e.data[alg.index[alpha]]
            else:
                j[a, b] = float(e)
    return ComplexStructureField(j=j, dj=dj)


def nabla_j(model, pt: ChartPoint, frame: Optional[Frame] = None) -> np.ndarray:
    """Covariant derivative of J in frame indices.

    Returns NJ with NJ[i, j, k] = <(nabla_{e_k} J) e_j, e_i>.
    """
    cc = chart_curvature(model, pt, 0)
    jet = complex_structure_jet(model, pt)
    if frame is None:
        frame = build_frame(model, pt)
    # (nabla_c J)^a_b = d_c J^a_b + Gamma^a_cp J^p_b - Gamma^p_cb J^a_p
    V = jet.dj.copy()
    V += np.einsum("acp,pb->abc", cc.gamma, jet.j)
    V -= np.einsum("pcb,ap->abc", cc.gamma, jet.j)
    W = np.einsum("ad,dbc->abc", cc.g, V)
    E = frame.vectors
    return np.einsum("ai,bj,ck,abc->ijk", E, E, E, W, optimize=True)


def validate_hermitian(model, pt: ChartPoint) -> dict:
    """Diagnostics: ||J^2 + I||, metric compatibility defect, ||nabla J||."""
    if not model.has_j:
        raise FrameError(f"{model.name} carries no complex structure")
    J = model.j_value(pt)
    g = model.metric_value(pt)
    n = model.dim
    j_square_defect = float(np.max(np.abs(J @ J + np.eye(n))))
    compat = float(np.max(np.abs(J.T @ g @ J - g)))
    nj = nabla_j(model, pt)
    return {
        "j_square_defect": j_square_defect,
        "compatibility_defect": compat,
        "nabla_j_norm": float(np.sqrt(np.sum(nj * nj))),
    }


# ---------------------------------------------------------------------------
# bundled point data
# ---------------------------------------------------------------------------

def hermitian_data(model, pt: Optional[ChartPoint] = None, deriv_order: int = 0,
                   seed_vector=None, frame: Optional[Frame] = None,
                   rng: Optional[np.random.Generator] = None,
                   with_nabla_j: bool = False) -> HermitianData:
    """Curvature, frame J and quartic form at a point (sampled if omitted)."""
    if pt is None:
        rng = rng or np.random.default_rng(0)
        pt = model.sample_point(rng)
    curv_data = curvature(model, pt, deriv_order, seed_vector=seed_vector, frame=frame)
    jf = frame_j(model, pt, curv_data.frame)
    form = quartic_form(curv_data, jf)
    nj = None
    if with_nabla_j:
        nj = nabla_j(model, pt, curv_data.frame)
    return HermitianData(model=model, point=pt, curv=curv_data, jf=jf,
                         quartic=form, nabla_j=nj)
