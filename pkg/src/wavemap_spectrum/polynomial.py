"""Dense univariate polynomials with generic scalar coefficients.

Coefficients are stored in ascending degree and may be any numeric type that
supports the arithmetic operators: ``int``, ``float``, ``complex``,
``fractions.Fraction`` or ``mpmath`` numbers.  Exact types stay exact, which
is what the resonance analysis relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

_EXACT = (int, Fraction)


def is_zero(c, scale=1.0, tol=0.0) -> bool:
    """Exact zero test for exact scalars, ``|c| <= tol*scale`` otherwise."""
    if isinstance(c, _EXACT):
        return c == 0
    return abs(c) <= tol * scale


def _strip(coeffs: Sequence) -> tuple:
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs) if coeffs else (0,)


@dataclass(frozen=True)
class Polynomial:
    """Polynomial ``sum(coeffs[k] * var**k)``."""

    coeffs: tuple
    var: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _strip(self.coeffs))

    @classmethod
    def const(cls, c, var="x") -> Polynomial:
        return cls((c,), var)

    @classmethod
    def identity(cls, var="x") -> Polynomial:
        return cls((0, 1), var)

    @property
    def degree(self) -> int:
        """Degree; the zero polynomial has degree -1."""
        if len(self.coeffs) == 1 and self.coeffs[0] == 0:
            return -1
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            return other
        return Polynomial((other,), self.var)

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return Polynomial(tuple(x + y for x, y in zip(a, b)), self.var)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(tuple(-c for c in self.coeffs), self.var)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Polynomial(tuple(out), self.var)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial((1,), self.var)
        for _ in range(k):
            out = out * self
        return out

    def derivative(self) -> Polynomial:
        if len(self.coeffs) == 1:
            return Polynomial((0,), self.var)
        return Polynomial(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0), self.var)

    def shift(self, x0, var=None) -> Polynomial:
        """Return ``q(t) = p(x0 + t)``."""
        t = Polynomial((x0, 1), var or self.var)
        acc = Polynomial((0,), t.var)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def valuation(self, tol: float = 1e-13) -> int:
        """Order of the zero at the origin (number of vanishing low coefficients).

        Floating coefficients count as zero when below ``tol`` times the largest
        coefficient magnitude.
        """
        if self.degree < 0:
            raise ValueError("the zero polynomial has infinite valuation")
        scale = max(abs(c) for c in self.coeffs)
        k = 0
        while is_zero(self.coeffs[k], scale, tol):
            k += 1
        return k

    def lower(self, k: int) -> Polynomial:
        """Divide by ``var**k``; the dropped coefficients must vanish."""
        if k == 0:
            return self
        if k < 0:
            return Polynomial((0,) * (-k) + self.coeffs, self.var)
        return Polynomial(self.coeffs[k:] or (0,), self.var)

    def roots(self) -> np.ndarray:
        """Complex roots (double precision, via the companion matrix)."""
        if self.degree < 1:
            return np.array([], dtype=complex)
        c = np.array([complex(x) for x in self.coeffs[::-1]])
        return np.roots(c)

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)!r}, var={self.var!r})"


def poly(coeffs: Iterable, var: str = "x") -> Polynomial:
    return Polynomial(tuple(coeffs), var)
