"""Truncated multivariate Taylor (jet) arithmetic.

Everything downstream that needs exact partial derivatives of a metric --
Christoffel symbols, curvature, its first and second covariant derivatives --
is evaluated through this module.  A jet of order k in n variables stores the
Taylor coefficients c_alpha = (d^alpha f / alpha!) for all multi-indices with
|alpha| <= k; arithmetic on jets then propagates derivatives exactly, with no
truncation error below the stored order.

Two layers are provided:

* :class:`Jet` -- a scalar-like object with operator overloads, used by model
  metric evaluators so they read like ordinary formulas.
* :class:`JetAlgebra` -- the shared coefficient bookkeeping plus batched raw
  operations on arrays whose last axis is the coefficient axis.  The curvature
  engine uses these directly for tensor-valued work.

Orders above 4 are rejected: nothing in the package needs more, and the
coefficient tables grow combinatorially.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .errors import JetOrderError

MAX_ORDER = 4

# chunk size (in gathered elements) for batched multiplication
_MUL_CHUNK = 4_000_000


def _multi_indices(nvars: int, order: int) -> list[tuple[int, ...]]:
    """All exponent tuples with |alpha| <= order, graded by degree then lex."""
    out = []
    for deg in range(order + 1):
        level = set()
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for i in combo:
                alpha[i] += 1
            level.add(tuple(alpha))
        out.extend(sorted(level))
    return out


class JetAlgebra:
    """Coefficient tables for jets of a fixed (nvars, order) signature."""

    def __init__(self, nvars: int, order: int):
        if order < 0 or order > MAX_ORDER:
            raise JetOrderError(f"jet order {order} outside supported range 0..{MAX_ORDER}")
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        self.nvars = nvars
        self.order = order
        self.exponents = _multi_indices(nvars, order)
        self.size = len(self.exponents)
        self.index = {alpha: i for i, alpha in enumerate(self.exponents)}
        self._degrees = np.array([sum(a) for a in self.exponents])
        self._build_mul_table()
        self._build_diff_maps()
        self._build_extract_maps()

    # -- table construction -------------------------------------------------

    def _build_mul_table(self):
        ia, ib, ig = [], [], []
        for i, a in enumerate(self.exponents):
            da = sum(a)
            for j, b in enumerate(self.exponents):
                if da + sum(b) > self.order:
                    continue
                g = tuple(x + y for x, y in zip(a, b))
                ia.append(i)
                ib.append(j)
                ig.append(self.index[g])
        ia = np.array(ia, dtype=np.intp)
        ib = np.array(ib, dtype=np.intp)
        ig = np.array(ig, dtype=np.intp)
        perm = np.argsort(ig, kind="stable")
        self._ia, self._ib, ig = ia[perm], ib[perm], ig[perm]
        # every target bin is hit (alpha + 0 = alpha), so segments enumerate 0..size-1
        self._seg_starts = np.searchsorted(ig, np.arange(self.size))
        self.table_size = len(ig)

    def _build_diff_maps(self):
        # d/dx_i in coefficient space: (df)_alpha = (alpha_i+1) * f_{alpha+e_i}
        src = np.zeros((self.nvars, self.size), dtype=np.intp)
        fac = np.zeros((self.nvars, self.size))
        for i in range(self.nvars):
            for j, alpha in enumerate(self.exponents):
                if sum(alpha) >= self.order:
                    continue
                up = list(alpha)
                up[i] += 1
                src[i, j] = self.index[tuple(up)]
                fac[i, j] = up[i]
        self._diff_src, self._diff_fac = src, fac

    def _build_extract_maps(self):
        # index grids + multiplicities for reading d^k tensors off a jet
        self._extract = {}
        n = self.nvars
        for k in range(1, self.order + 1):
            idx = np.zeros((n,) * k, dtype=np.intp)
            fac = np.zeros((n,) * k)
            for combo in np.ndindex(*(n,) * k):
                alpha = [0] * n
                for i in combo:
                    alpha[i] += 1
                idx[combo] = self.index[tuple(alpha)]
                fac[combo] = math.prod(math.factorial(a) for a in alpha)
            self._extract[k] = (idx, fac)

    # -- raw batched operations (last axis = coefficients) ------------------

    def zeros(self, shape=()) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.size,))

    def constant(self, c, shape=()) -> np.ndarray:
        out = self.zeros(shape)
        out[..., 0] = c
        return out

    def variables(self, values) -> np.ndarray:
        """Seed jets x_i = values[i] + dx_i, returned as an (nvars, size) array."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.nvars,):
            raise ValueError(f"expected {self.nvars} seed values, got {values.shape}")
        out = self.zeros((self.nvars,))
        out[:, 0] = values
        if self.order >= 1:
            for i in range(self.nvars):
                e_i = tuple(1 if j == i else 0 for j in range(self.nvars))
                out[i, self.index[e_i]] = 1.0
        return out

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        a = np.broadcast_to(a, batch + (self.size,)).reshape(-1, self.size)
        b = np.broadcast_to(b, batch + (self.size,)).reshape(-1, self.size)
        rows = a.shape[0]
        chunk = max(1, _MUL_CHUNK // max(1, self.table_size))
        out = np.empty((rows, self.size))
        for lo in range(0, rows, chunk):
            hi = min(rows, lo + chunk)
            prod = a[lo:hi, self._ia] * b[lo:hi, self._ib]
            out[lo:hi] = np.add.reduceat(prod, self._seg_starts, axis=-1)
        return out.reshape(batch + (self.size,))

    def diff(self, a: np.ndarray, i: int) -> np.ndarray:
        """Partial derivative jet; coefficients of top degree become unreliable."""
        return a[..., self._diff_src[i]] * self._diff_fac[i]

    def diff_all(self, a: np.ndarray) -> np.ndarray:
        """Stack of all partial derivative jets along a new last-but-one axis."""
        return a[..., self._diff_src] * self._diff_fac

    def value(self, a: np.ndarray) -> np.ndarray:
        return a[..., 0]

    def extract(self, a: np.ndarray, k: int) -> np.ndarray:
        """Read the order-k partial derivative tensor (k trailing axes) off a jet."""
        if k == 0:
            return a[..., 0]
        idx, fac = self._extract[k]
        return a[..., idx] * fac

    def compose(self, u: np.ndarray, derivs: np.ndarray) -> np.ndarray:
        """Evaluate f(u) given derivs[m] = f^(m)(value(u)) / m!, shape (order+1, ...batch)."""
        w = u.copy()
        w[..., 0] = 0.0
        res = self.constant(derivs[self.order], u.shape[:-1])
        for m in range(self.order - 1, -1, -1):
            res = self.mul(res, w)
            res[..., 0] += derivs[m]
        return res

    def reciprocal(self, u: np.ndarray) -> np.ndarray:
        c = u[..., 0]
        derivs = np.array([(-1.0) ** m / c ** (m + 1) for m in range(self.order + 1)])
        return self.compose(u, derivs)

    def exp(self, u: np.ndarray) -> np.ndarray:
        e = np.exp(u[..., 0])
        derivs = np.array([e / math.factorial(m) for m in range(self.order + 1)])
        return self.compose(u, derivs)

    def log(self, u: np.ndarray) -> np.ndarray:
        c = u[..., 0]
        derivs = [np.log(c)]
        for m in range(1, self.order + 1):
            derivs.append((-1.0) ** (m + 1) / (m * c ** m))
        return self.compose(u, np.array(derivs))

    def sqrt(self, u: np.ndarray) -> np.ndarray:
        c = u[..., 0]
        derivs = [np.sqrt(c)]
        coef = 0.5
        for m in range(1, self.order + 1):
            derivs.append(coef * c ** (0.5 - m))
            coef *= (0.5 - m) / (m + 1)
        return self.compose(u, np.array(derivs))


@lru_cache(maxsize=32)
def algebra(nvars: int, order: int) -> JetAlgebra:
    return JetAlgebra(nvars, order)


class Jet:
    """Scalar-like truncated Taylor series; supports mixed arithmetic with floats."""

    __slots__ = ("alg", "data")
    __array_priority__ = 100  # keep numpy from absorbing us in mixed ops

    def __init__(self, alg: JetAlgebra, data: np.ndarray):
        self.alg = alg
        self.data = data

    # constructors
    @staticmethod
    def constant(alg: JetAlgebra, c: float) -> "Jet":
        return Jet(alg, alg.constant(float(c)))

    @staticmethod
    def variables(alg: JetAlgebra, values) -> list["Jet"]:
        raw = alg.variables(values)
        return [Jet(alg, raw[i]) for i in range(alg.nvars)]

    # inspection
    @property
    def value(self) -> float:
        return float(self.data[0])

    def partial(self, alpha) -> float:
        """Partial derivative d^alpha f (not the raw Taylor coefficient)."""
        alpha = tuple(alpha)
        fac = math.prod(math.factorial(a) for a in alpha)
        return float(self.data[self.alg.index[alpha]]) * fac

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.alg is not self.alg:
                raise ValueError("jets from different algebras")
            return other.data
        return self.alg.constant(float(other))

    # arithmetic
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.alg, self.data + other.data)
        out = self.data.copy()
        out[0] += other
        return Jet(self.alg, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.alg, -self.data)

    def __sub__(self, other):
        return self.__add__(-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.alg, self.alg.mul(self.data, other.data))
        return Jet(self.alg, self.data * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * Jet(self.alg, self.alg.reciprocal(other.data))
        return Jet(self.alg, self.data / float(other))

    def __rtruediv__(self, other):
        return Jet(self.alg, float(other) * self.alg.reciprocal(self.data))

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("jet powers must be nonnegative integers")
        result = Jet.constant(self.alg, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def __repr__(self):
        return f"Jet(n={self.alg.nvars}, order={self.alg.order}, value={self.value:.6g})"


# generic scalar helpers: work on floats and Jets alike, so metric evaluators
# can be written once and run under both plain and jet evaluation

def jexp(x):
    if isinstance(x, Jet):
        return Jet(x.alg, x.alg.exp(x.data))
    return math.exp(x)


def jlog(x):
    if isinstance(x, Jet):
        return Jet(x.alg, x.alg.log(x.data))
    return math.log(x)


def jsqrt(x):
    if isinstance(x, Jet):
        return Jet(x.alg, x.alg.sqrt(x.data))
    return math.sqrt(x)


def scalar_value(x) -> float:
    """Numeric value of a float or a Jet (for branching in evaluators)."""
    return x.value if isinstance(x, Jet) else float(x)
