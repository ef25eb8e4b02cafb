"""Sparse polynomials on R^n used for fiber-sphere integrands.

A monomial is keyed by the sorted tuple of its variable indices (with
repetition), e.g. x0^2 x2 -> (0, 0, 2).  Everything the fiber calculus needs
is polynomial of degree <= 8, so products and Laplacians stay tiny.
"""

from __future__ import annotations

import math
from itertools import combinations_with_replacement

import numpy as np

_EPS_COEFF = 0.0  # keep exact zeros out of the term map


class SymPoly:
    """Polynomial with real coefficients, sparse over monomial keys."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict[tuple, float] | None = None):
        self.nvars = nvars
        self.terms: dict[tuple, float] = {}
        if terms:
            for k, c in terms.items():
                if c != _EPS_COEFF:
                    self.terms[tuple(sorted(k))] = self.terms.get(tuple(sorted(k)), 0.0) + c

    # -- constructors --------------------------------------------------------

    @staticmethod
    def constant(nvars: int, c: float) -> "SymPoly":
        return SymPoly(nvars, {(): float(c)} if c else {})

    @staticmethod
    def variable(nvars: int, i: int) -> "SymPoly":
        return SymPoly(nvars, {(i,): 1.0})

    @staticmethod
    def norm_squared(nvars: int) -> "SymPoly":
        return SymPoly(nvars, {(i, i): 1.0 for i in range(nvars)})

    @staticmethod
    def from_symmetric_tensor(T: np.ndarray, degree: int) -> "SymPoly":
        """Polynomial sum_{i1..ik} T[i1..ik] x_i1 ... x_ik for symmetric T."""
        T = np.asarray(T, dtype=float)
        n = T.shape[0]
        terms: dict[tuple, float] = {}
        for key in combinations_with_replacement(range(n), degree):
            mult = _n_permutations(key)
            val = T[key] * mult
            if val != 0.0:
                terms[key] = terms.get(key, 0.0) + val
        return SymPoly(n, terms)

    @staticmethod
    def random_homogeneous(nvars: int, degree: int, rng: np.random.Generator) -> "SymPoly":
        terms = {}
        for key in combinations_with_replacement(range(nvars), degree):
            terms[key] = float(rng.standard_normal())
        return SymPoly(nvars, terms)

    # -- structure -----------------------------------------------------------

    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = {len(k) for k in self.terms}
        if not degs:
            return True
        if degree is None:
            return len(degs) == 1
        return degs == {degree}

    def counts(self, key: tuple) -> tuple:
        alpha = [0] * self.nvars
        for i in key:
            alpha[i] += 1
        return tuple(alpha)

    # -- algebra ---------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, SymPoly):
            other = SymPoly.constant(self.nvars, other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return SymPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return SymPoly(self.nvars, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, SymPoly):
            other = SymPoly.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, SymPoly):
            return SymPoly(self.nvars, {k: c * float(other) for k, c in self.terms.items()})
        out: dict[tuple, float] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(sorted(k1 + k2))
                out[k] = out.get(k, 0.0) + c1 * c2
        return SymPoly(self.nvars, out)

    __rmul__ = __mul__

    # -- calculus --------------------------------------------------------------

    def partial(self, i: int) -> "SymPoly":
        out: dict[tuple, float] = {}
        for k, c in self.terms.items():
            m = k.count(i)
            if m == 0:
                continue
            kk = list(k)
            kk.remove(i)
            kk = tuple(kk)
            out[kk] = out.get(kk, 0.0) + c * m
        return SymPoly(self.nvars, out)

    def gradient(self) -> list["SymPoly"]:
        return [self.partial(i) for i in range(self.nvars)]

    def laplacian(self) -> "SymPoly":
        out: dict[tuple, float] = {}
        for k, c in self.terms.items():
            for i in set(k):
                m = k.count(i)
                if m < 2:
                    continue
                kk = list(k)
                kk.remove(i)
                kk.remove(i)
                kk = tuple(kk)
                out[kk] = out.get(kk, 0.0) + c * m * (m - 1)
        return SymPoly(self.nvars, out)

    # -- evaluation -------------------------------------------------------------

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        total = 0.0
        for k, c in self.terms.items():
            p = c
            for i in k:
                p *= v[i]
            total += p
        return total

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def __repr__(self):
        return f"SymPoly(n={self.nvars}, terms={len(self.terms)}, deg={self.degree()})"


def _n_permutations(key: tuple) -> float:
    """Number of distinct orderings of a sorted index tuple."""
    total = math.factorial(len(key))
    for i in set(key):
        total //= math.factorial(key.count(i))
    return float(total)
