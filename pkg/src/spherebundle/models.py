"""Catalog of explicit model manifolds plus combinators and config ingestion.

Metrics are hand-coded closed forms written over generic scalars, so the same
evaluator runs under plain floats and under jets.  Constant-holomorphic-
curvature metrics use the affine-chart potential (2/c) log(1 + |z|^2), whose
real form carries the familiar 4/c (1+|z|^2)^-2 factors; with this scale the
holomorphic sectional curvature is exactly the parameter c (so c = 1 for a
projective line is the unit two-sphere).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import FlatModelError, ModelSpecError, NotEinsteinError
from .geometry import ChartPoint, curvature, frame_j, max_abs_sec, standard_j
from .jets import jexp, scalar_value


@dataclass(frozen=True)
class Chart:
    chart_id: int
    radius: float


class ModelManifold:
    """Immutable chart-based manifold with jet-capable metric (and J) evaluators."""

    def __init__(self, name: str, dim: int, charts: list[Chart],
                 metric_fn: Callable, j_fn: Optional[Callable] = None,
                 einstein_const: Optional[float] = None,
                 hol_sec_const: Optional[float] = None,
                 homogeneous: bool = False, flat: bool = False,
                 kaehler: bool = False,
                 sample_fn: Optional[Callable] = None,
                 transition_fn: Optional[Callable] = None,
                 factor_slices: Optional[list[slice]] = None,
                 factor_hol_sec: Optional[list[Optional[float]]] = None):
        self.name = name
        self.dim = dim
        self.charts = charts
        self._metric_fn = metric_fn
        self._j_fn = j_fn
        self.einstein_const = einstein_const
        self.hol_sec_const = hol_sec_const
        self.homogeneous = homogeneous
        self.flat = flat
        self.kaehler = kaehler
        self._sample_fn = sample_fn
        self._transition_fn = transition_fn
        self.factor_slices = factor_slices or [slice(0, dim)]
        self.factor_hol_sec = factor_hol_sec if factor_hol_sec is not None else [hol_sec_const]

    # evaluator access ------------------------------------------------------

    def metric_scalars(self, x, chart_id: int = 0):
        return self._metric_fn(x, chart_id)

    def metric_value(self, pt: ChartPoint) -> np.ndarray:
        return np.asarray(self._metric_fn(list(pt.coords), pt.chart_id), dtype=float)

    @property
    def has_j(self) -> bool:
        return self._j_fn is not None

    def j_scalars(self, x, chart_id: int = 0):
        if self._j_fn is None:
            raise ModelSpecError(f"model {self.name} carries no complex structure")
        return self._j_fn(x, chart_id)

    def j_value(self, pt: ChartPoint) -> Optional[np.ndarray]:
        if self._j_fn is None:
            return None
        rows = self._j_fn(list(pt.coords), pt.chart_id)
        return np.array([[scalar_value(e) for e in row] for row in rows], dtype=float)

    # sampling / charts -------------------------------------------------------

    def sample_point(self, rng: np.random.Generator) -> ChartPoint:
        return ChartPoint(0, self._sample_fn(rng))

    def transition(self, pt: ChartPoint, target_chart: int) -> ChartPoint:
        if self._transition_fn is None:
            raise ModelSpecError(f"model {self.name} defines no chart transitions")
        return self._transition_fn(pt, target_chart)

    def __repr__(self):
        return f"ModelManifold({self.name}, n={self.dim})"


# ---------------------------------------------------------------------------
# model specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: tuple = ()        # sorted (key, value) pairs, hashable
    children: tuple = ()

    def param(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


def spec(kind: str, children=(), **params) -> ModelSpec:
    items = tuple(sorted((k, tuple(v) if isinstance(v, (list, tuple)) else v)
                         for k, v in params.items()))
    return ModelSpec(kind=kind, params=items, children=tuple(children))


# ---------------------------------------------------------------------------
# catalog metrics
# ---------------------------------------------------------------------------

def _standard_j_rows(n: int):
    J = standard_j(n)

    def j_fn(x, chart_id=0):
        return J.tolist()

    return j_fn


def _apply_standard_j(x):
    """(Ju) for interleaved coordinates, entries are generic scalars."""
    out = []
    for k in range(0, len(x), 2):
        out.append(-1.0 * x[k + 1])
        out.append(1.0 * x[k])
    return out


def flat_torus(n: int) -> ModelManifold:
    if n < 1:
        raise ModelSpecError("torus dimension must be >= 1")
    eye = np.eye(n).tolist()

    def metric(x, chart_id=0):
        return eye

    return ModelManifold(
        name=f"flat_torus({n})", dim=n, charts=[Chart(0, math.inf)],
        metric_fn=metric, j_fn=_standard_j_rows(n) if n % 2 == 0 else None,
        einstein_const=0.0, hol_sec_const=0.0 if n % 2 == 0 else None,
        homogeneous=True, flat=True, kaehler=n % 2 == 0,
        sample_fn=lambda rng: rng.uniform(-math.pi, math.pi, n))


def round_sphere(n: int, radius: float = 1.0) -> ModelManifold:
    if n < 2 or radius <= 0:
        raise ModelSpecError("sphere needs n >= 2 and radius > 0")
    scale = 4.0 * radius * radius

    def metric(x, chart_id=0):
        s = 1.0
        for xi in x:
            s = s + xi * xi
        f = scale / (s * s)
        return [[f if i == j else 0.0 for j in range(n)] for i in range(n)]

    def sample(rng):
        while True:
            w = rng.standard_normal(n + 1)
            w = w / np.linalg.norm(w)
            if w[n] < 0.6:
                return w[:n] / (1.0 - w[n])

    return ModelManifold(
        name=f"round_sphere({n},r={radius:g})", dim=n, charts=[Chart(0, 25.0)],
        metric_fn=metric, einstein_const=(n - 1) / radius ** 2,
        homogeneous=True, sample_fn=sample)


def _space_form_metric(n: int, c: float, sign: float):
    """Shared form for constant holomorphic curvature c (sign=+1) / c<0 (sign=-1)."""
    factor = 4.0 / abs(c)

    def metric(x, chart_id=0):
        s = 1.0
        for xi in x:
            s = s + sign * (xi * xi)
        inv2 = 1.0 / (s * s)
        ju = _apply_standard_j(x)
        rows = []
        for i in range(n):
            row = []
            for j in range(i + 1):
                e = -sign * (x[i] * x[j] + ju[i] * ju[j])
                if i == j:
                    e = e + s
                row.append(factor * e * inv2)
            rows.append(row)
        return [[rows[i][j] if j <= i else rows[j][i] for j in range(n)] for i in range(n)]

    return metric


def fubini_study(complex_dim: int, hol_sec: float = 1.0) -> ModelManifold:
    if complex_dim < 1 or hol_sec <= 0:
        raise ModelSpecError("fubini_study needs complex_dim >= 1 and hol_sec > 0")
    n = 2 * complex_dim
    metric = _space_form_metric(n, hol_sec, +1.0)

    def sample(rng):
        while True:
            w = rng.standard_normal(complex_dim + 1) + 1j * rng.standard_normal(complex_dim + 1)
            z = w[1:] / w[0]
            if np.max(np.abs(z)) < 2.0:
                out = np.empty(n)
                out[0::2] = z.real
                out[1::2] = z.imag
                return out

    def transition(pt: ChartPoint, target: int) -> ChartPoint:
        if complex_dim != 1 or target not in (0, 1) or pt.chart_id == target:
            raise ModelSpecError("transition defined between the two affine charts of a line")
        xx, yy = pt.coords
        r2 = xx * xx + yy * yy
        if r2 < 1e-14:
            raise ModelSpecError("origin is not covered by the opposite affine chart")
        return ChartPoint(target, np.array([xx / r2, -yy / r2]))

    charts = [Chart(0, 25.0)] + ([Chart(1, 25.0)] if complex_dim == 1 else [])
    return ModelManifold(
        name=f"fubini_study({complex_dim},c={hol_sec:g})", dim=n, charts=charts,
        metric_fn=metric, j_fn=_standard_j_rows(n),
        einstein_const=(n + 2) * hol_sec / 4.0, hol_sec_const=hol_sec,
        homogeneous=True, kaehler=True, sample_fn=sample,
        transition_fn=transition if complex_dim == 1 else None)


def complex_hyperbolic(complex_dim: int, hol_sec: float = -1.0) -> ModelManifold:
    if complex_dim < 1 or hol_sec >= 0:
        raise ModelSpecError("complex_hyperbolic needs complex_dim >= 1 and hol_sec < 0")
    n = 2 * complex_dim
    metric = _space_form_metric(n, hol_sec, -1.0)

    def sample(rng):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        t = rng.uniform() ** (1.0 / n)
        return 0.6 * t * v

    return ModelManifold(
        name=f"complex_hyperbolic({complex_dim},c={hol_sec:g})", dim=n,
        charts=[Chart(0, 0.95)], metric_fn=metric, j_fn=_standard_j_rows(n),
        einstein_const=(n + 2) * hol_sec / 4.0, hol_sec_const=hol_sec,
        homogeneous=True, kaehler=True, sample_fn=sample)


# ---------------------------------------------------------------------------
# combinators
# ---------------------------------------------------------------------------

def product(left: ModelManifold, right: ModelManifold) -> ModelManifold:
    nl, nr = left.dim, right.dim
    n = nl + nr
    has_j = left.has_j and right.has_j

    def metric(x, chart_id=0):
        gl = left.metric_scalars(x[:nl], 0)
        gr = right.metric_scalars(x[nl:], 0)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                if i < nl and j < nl:
                    row.append(gl[i][j])
                elif i >= nl and j >= nl:
                    row.append(gr[i - nl][j - nl])
                else:
                    row.append(0.0)
            rows.append(row)
        return rows

    j_fn = None
    if has_j:
        def j_fn(x, chart_id=0):
            jl = left.j_scalars(x[:nl], 0)
            jr = right.j_scalars(x[nl:], 0)
            rows = []
            for i in range(n):
                row = []
                for j in range(n):
                    if i < nl and j < nl:
                        row.append(jl[i][j])
                    elif i >= nl and j >= nl:
                        row.append(jr[i - nl][j - nl])
                    else:
                        row.append(0.0)
                rows.append(row)
            return rows

    lam = None
    if left.einstein_const is not None and right.einstein_const is not None \
            and abs(left.einstein_const - right.einstein_const) < 1e-12:
        lam = left.einstein_const

    def sample(rng):
        return np.concatenate([left.sample_point(rng).coords, right.sample_point(rng).coords])

    radius = min(left.charts[0].radius, right.charts[0].radius)
    slices = [slice(s.start, s.stop) for s in left.factor_slices] + \
             [slice(s.start + nl, s.stop + nl) for s in right.factor_slices]
    return ModelManifold(
        name=f"product({left.name},{right.name})", dim=n, charts=[Chart(0, radius)],
        metric_fn=metric, j_fn=j_fn, einstein_const=lam,
        hol_sec_const=0.0 if (left.flat and right.flat) else None,
        homogeneous=left.homogeneous and right.homogeneous,
        flat=left.flat and right.flat, kaehler=left.kaehler and right.kaehler,
        sample_fn=sample,
        factor_slices=slices,
        factor_hol_sec=left.factor_hol_sec + right.factor_hol_sec)


def scaled(child: ModelManifold, scale_factor: float) -> ModelManifold:
    if scale_factor <= 0:
        raise ModelSpecError("scale factor must be positive")
    lam2 = scale_factor * scale_factor

    def metric(x, chart_id=0):
        g = child.metric_scalars(x, chart_id)
        return [[lam2 * e for e in row] for row in g]

    return ModelManifold(
        name=f"scaled({child.name},{scale_factor:g})", dim=child.dim, charts=child.charts,
        metric_fn=metric, j_fn=child._j_fn,
        einstein_const=None if child.einstein_const is None else child.einstein_const / lam2,
        hol_sec_const=None if child.hol_sec_const is None else child.hol_sec_const / lam2,
        homogeneous=child.homogeneous, flat=child.flat, kaehler=child.kaehler,
        sample_fn=child._sample_fn, transition_fn=child._transition_fn,
        factor_slices=child.factor_slices,
        factor_hol_sec=[None if h is None else h / lam2 for h in child.factor_hol_sec])


def conformal(child: ModelManifold, amplitude: float = 0.1, width: float = 0.5,
              center=None) -> ModelManifold:
    """Rescale by exp(2u) with a compactly supported smooth bump u.

    u(x) = amplitude * exp(1/(t - 1)) on t < 1, with t = |x - center|^2/width^2,
    and u = 0 outside.  J is left unchanged, so the result stays almost-Hermitian
    but is no longer Kaehler (or Einstein) where du is nonzero.
    """
    if amplitude == 0.0:
        return child  # identity combinator, bitwise
    n = child.dim
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if center.shape != (n,):
        raise ModelSpecError(f"bump center must have dimension {n}")
    if np.linalg.norm(center) + width > child.charts[0].radius:
        raise ModelSpecError("conformal bump exceeds chart validity ball")

    def factor(x):
        t = 0.0
        for xi, ci in zip(x, center):
            d = xi - ci
            t = t + d * d
        t = t / (width * width)
        if scalar_value(t) >= 1.0 - 1e-12:
            return None
        u = amplitude * jexp(1.0 / (t - 1.0))
        return jexp(2.0 * u)

    def metric(x, chart_id=0):
        g = child.metric_scalars(x, chart_id)
        f = factor(x)
        if f is None:
            return g
        return [[f * e for e in row] for row in g]

    def sample(rng):
        # stay inside the bump support, where the rescale is actually active
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        t = rng.uniform() ** (1.0 / n)
        return center + 0.9 * width * t * v

    return ModelManifold(
        name=f"conformal({child.name},A={amplitude:g},w={width:g})", dim=n,
        charts=child.charts, metric_fn=metric, j_fn=child._j_fn,
        homogeneous=False, flat=False, kaehler=False,
        sample_fn=sample, transition_fn=child._transition_fn,
        factor_slices=child.factor_slices, factor_hol_sec=[None] * len(child.factor_hol_sec))


def normalize(model: ModelManifold, restarts: int = 64,
              rng: Optional[np.random.Generator] = None) -> ModelManifold:
    """Rescale so that max |sec| = 1; flat models cannot be normalized."""
    if model.flat:
        raise FlatModelError(f"{model.name} is flat; normalization undefined")
    m = max_abs_sec(model, restarts=restarts, rng=rng)
    if m < 1e-10:
        raise FlatModelError(f"{model.name} has numerically zero curvature")
    return scaled(model, math.sqrt(m))


# ---------------------------------------------------------------------------
# spec -> model
# ---------------------------------------------------------------------------

def make_model(model_spec: ModelSpec, validate: bool = True) -> ModelManifold:
    model = _build(model_spec)
    if validate:
        _verify_metadata(model)
    return model


def _build(s: ModelSpec) -> ModelManifold:
    kind = s.kind
    if kind == "flat_torus":
        return flat_torus(int(s.param("dim", 4)))
    if kind == "round_sphere":
        return round_sphere(int(s.param("dim", 2)), float(s.param("radius", 1.0)))
    if kind == "fubini_study":
        return fubini_study(int(s.param("complex_dim", 1)), float(s.param("hol_sec", 1.0)))
    if kind == "complex_hyperbolic":
        return complex_hyperbolic(int(s.param("complex_dim", 1)), float(s.param("hol_sec", -1.0)))
    if kind == "product":
        if len(s.children) != 2:
            raise ModelSpecError("product takes exactly two children")
        return product(_build(s.children[0]), _build(s.children[1]))
    if kind == "scaled":
        if len(s.children) != 1:
            raise ModelSpecError("scaled takes exactly one child")
        return scaled(_build(s.children[0]), float(s.param("scale", 1.0)))
    if kind == "conformal":
        if len(s.children) != 1:
            raise ModelSpecError("conformal takes exactly one child")
        center = s.param("center")
        return conformal(_build(s.children[0]), float(s.param("amplitude", 0.1)),
                         float(s.param("width", 0.5)),
                         None if center is None else list(center))
    raise ModelSpecError(f"unknown model kind {kind!r}")


def _verify_metadata(model: ModelManifold, samples: int = 3):
    """Sampled consistency check of declared Einstein constant / constant H."""
    rng = np.random.default_rng(zlib.crc32(model.name.encode()))
    pts = [model.sample_point(rng) for _ in range(samples)]
    for pt in pts:
        data = curvature(model, pt, 0)
        n = model.dim
        if model.einstein_const is not None:
            dev = float(np.max(np.abs(data.ricci - model.einstein_const * np.eye(n))))
            if dev > 1e-8:
                raise NotEinsteinError(dev, pt.coords)
        if model.hol_sec_const is not None and model.has_j:
            Jf = frame_j(model, pt, data.frame)
            for _ in range(4):
                x = rng.standard_normal(n)
                x /= np.linalg.norm(x)
                h = np.einsum("abcd,a,b,c,d->", data.R, x, Jf @ x, x, Jf @ x)
                if abs(h - model.hol_sec_const) > 1e-8:
                    raise ModelSpecError(
                        f"{model.name}: declared constant H {model.hol_sec_const} "
                        f"violated by {abs(h - model.hol_sec_const):.2e}")


# ---------------------------------------------------------------------------
# config files and catalog
# ---------------------------------------------------------------------------

def _load_toml(path):
    try:
        import tomllib as toml_mod  # py311+
    except ModuleNotFoundError:
        import tomli as toml_mod
    with open(path, "rb") as fh:
        return toml_mod.load(fh)


def _spec_from_dict(d: dict) -> ModelSpec:
    if "kind" not in d:
        raise ModelSpecError("model spec table needs a 'kind' key")
    kind = d["kind"]
    children = []
    params = {}
    for key, value in d.items():
        if key == "kind":
            continue
        if isinstance(value, dict):
            children.append((key, _spec_from_dict(value)))
        else:
            params[key] = value
    if kind == "product":
        names = [k for k, _ in children]
        if sorted(names) != ["left", "right"]:
            raise ModelSpecError("product spec needs [left] and [right] tables")
        children.sort(key=lambda kv: 0 if kv[0] == "left" else 1)
    elif children and [k for k, _ in children] != ["child"]:
        raise ModelSpecError(f"unexpected sub-tables {[k for k, _ in children]} for kind {kind!r}")
    return spec(kind, children=[c for _, c in children], **params)


def parse_spec_file(path) -> ModelSpec:
    return _spec_from_dict(_load_toml(path))


CATALOG_SPECS: dict[str, ModelSpec] = {
    "torus4": spec("flat_torus", dim=4),
    "s2": spec("round_sphere", dim=2, radius=1.0),
    "s4": spec("round_sphere", dim=4, radius=1.0),
    "cp1": spec("fubini_study", complex_dim=1, hol_sec=1.0),
    "cp2": spec("fubini_study", complex_dim=2, hol_sec=1.0),
    "cp3": spec("fubini_study", complex_dim=3, hol_sec=1.0),
    "ch2": spec("complex_hyperbolic", complex_dim=2, hol_sec=-1.0),
    "cp1xcp1": spec("product", children=[
        spec("fubini_study", complex_dim=1, hol_sec=1.0),
        spec("fubini_study", complex_dim=1, hol_sec=1.0)]),
    "cp1xcp1_c2": spec("product", children=[
        spec("fubini_study", complex_dim=1, hol_sec=2.0),
        spec("fubini_study", complex_dim=1, hol_sec=2.0)]),
    "conformal_cp1xcp1": spec("conformal", amplitude=0.1, width=0.5,
                              center=(0.0, 0.0, 0.0, 0.0), children=[
        spec("product", children=[
            spec("fubini_study", complex_dim=1, hol_sec=1.0),
            spec("fubini_study", complex_dim=1, hol_sec=1.0)])]),
}


@lru_cache(maxsize=None)
def catalog_model(name: str) -> ModelManifold:
    if name not in CATALOG_SPECS:
        raise ModelSpecError(f"unknown catalog model {name!r}; known: {sorted(CATALOG_SPECS)}")
    return make_model(CATALOG_SPECS[name])
