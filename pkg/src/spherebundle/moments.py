"""Exact monomial moments over unit spheres and polynomial fiber integrals.

Every fiber integrand in the package is a polynomial of degree <= 8 in the
fiber variable, so integration reduces to a table of exact monomial moments

    I(alpha) = integral over S^{n-1} of v^alpha,

which vanishes when any alpha_i is odd and otherwise equals

    Vol(S^{n-1}) * prod_i (alpha_i - 1)!! / prod_{m=1..|alpha|/2} (n + 2m - 2).

No quadrature appears anywhere; this removes a whole error-analysis axis.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction
from functools import lru_cache

from .polynomials import SymPoly


def sphere_volume(n: int) -> float:
    """Vol(S^{n-1}) = 2 pi^{n/2} / Gamma(n/2)."""
    if n < 1:
        raise ValueError("sphere dimension parameter n must be >= 1")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def monomial_moment(n: int, alpha) -> float:
    """Exact integral of v^alpha over the unit sphere S^{n-1} in R^n."""
    if n < 2:
        raise ValueError("need n >= 2")
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ValueError(f"multi-index length {len(alpha)} != n = {n}")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be nonnegative")
    if any(a % 2 for a in alpha):
        return 0.0
    half = sum(alpha) // 2
    num = 1
    for a in alpha:
        num *= _double_factorial(a - 1)
    den = 1
    for m in range(1, half + 1):
        den *= n + 2 * m - 2
    return sphere_volume(n) * float(Fraction(num, den))


class MomentTable:
    """Cached moments for one sphere dimension; safe for concurrent reads."""

    def __init__(self, n: int):
        self.n = n
        self.volume = sphere_volume(n)
        self._cache: dict[tuple, float] = {}

    def moment(self, alpha) -> float:
        alpha = tuple(int(a) for a in alpha)
        hit = self._cache.get(alpha)
        if hit is None:
            hit = monomial_moment(self.n, alpha)
            self._cache[alpha] = hit
        return hit

    def moment_of_key(self, key: tuple) -> float:
        """Moment of the monomial given as a sorted index tuple."""
        alpha = [0] * self.n
        for i in key:
            alpha[i] += 1
        return self.moment(alpha)


@lru_cache(maxsize=64)
def moment_table(n: int) -> MomentTable:
    return MomentTable(n)


def integrate_fiber(poly: SymPoly, n: int | None = None) -> float:
    """Exact integral of a polynomial over the unit sphere S^{n-1}.

    Odd-degree terms integrate to zero; their presence usually means the
    caller built the wrong integrand, so they trigger a warning.
    """
    n = poly.nvars if n is None else n
    if n != poly.nvars:
        raise ValueError(f"polynomial has {poly.nvars} variables, expected {n}")
    if poly.degree() > 12:
        # statistics integrands stay at degree <= 8; the squared-restriction
        # operator checks reach degree 10
        raise ValueError("fiber integrands are expected to have degree <= 12")
    if any(len(k) % 2 for k in poly.terms):
        warnings.warn("odd-degree terms in fiber integrand integrate to zero",
                      stacklevel=2)
    table = moment_table(n)
    total = 0.0
    for key, coeff in poly.terms.items():
        if len(key) % 2:
            continue
        total += coeff * table.moment_of_key(key)
    return total


def fiber_average(poly: SymPoly, n: int | None = None) -> float:
    n = poly.nvars if n is None else n
    return integrate_fiber(poly, n) / sphere_volume(n)
