"""Polynomial ODEs, Frobenius series and their evaluation.

The linearised eigenvalue problem about the self-similar profile
``U0 = 2 arctan(rho)`` reads

    -(1 - rho^2) v'' + 2 lam rho v' + lam (lam - 1) v + V(rho) / rho^2 v = 0,

with ``V(rho) = 2 cos(4 arctan rho)``.  After

    v(rho) = (2 - x)^((lam - 1)/2) y(x),   x = 2 rho^2 / (1 + rho^2)

it becomes

    x^2 (1-x)(2-x) y'' + x [1 - (1+lam) x (2-x)] y'
        - 1/4 [lam^2 x (1-x) + 9 x^2 - 17 x + 4] y = 0.

Both are stored with polynomial coefficients so that the series recurrences
can be generated mechanically at any regular singular point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import mpmath

from .polynomial import Polynomial, is_zero

ZERO_TOL = 1e-10
MAX_TERMS = 2**20


class ResonanceObstruction(ArithmeticError):
    """Raised when a smaller-exponent Frobenius series needs a logarithm.

    ``index`` is the resonant order and ``value`` the consistency value that
    would have had to vanish for a log-free series to exist.
    """

    def __init__(self, index, value):
        super().__init__(f"log-free series obstructed at order {index} (consistency value {value!r})")
        self.index = index
        self.value = value


def potential(rho):
    """``V(rho) = 2 cos(4 arctan rho)``."""
    if isinstance(rho, (mpmath.mpf, mpmath.mpc)):
        return 2 * mpmath.cos(4 * mpmath.atan(rho))
    return 2.0 * math.cos(4.0 * math.atan(rho))


def potential_rational(rho):
    """Rational form ``2 (1 - 6 rho^2 + rho^4) / (1 + rho^2)^2`` of :func:`potential`."""
    r2 = rho * rho
    return 2 * (1 - 6 * r2 + r2 * r2) / (1 + r2) ** 2


@dataclass(frozen=True)
class LinearODE:
    """``c2(x) y'' + c1(x) y' + c0(x) y = 0`` with polynomial coefficients."""

    c2: Polynomial
    c1: Polynomial
    c0: Polynomial
    lam: complex = 0
    domain: tuple = (0.0, 1.0)
    name: str = ""

    @property
    def var(self) -> str:
        return self.c2.var

    def residual(self, x, y, dy, d2y):
        return self.c2(x) * d2y + self.c1(x) * dy + self.c0(x) * y

    def singular_points(self):
        """Finite singular points (roots of ``c2``), double precision."""
        return self.c2.roots()


def build_spectral_ode(lam) -> LinearODE:
    """Eigenvalue ODE in ``rho`` multiplied through by ``rho^2 (1 + rho^2)^2``."""
    r = Polynomial.identity("rho")
    r2 = r * r
    w = r2 * (1 + r2) ** 2
    c2 = -(1 - r2) * w
    c1 = 2 * lam * r * w
    c0 = lam * (lam - 1) * w + 2 * (1 - 6 * r2 + r2 * r2)
    return LinearODE(c2, c1, c0, lam, (0.0, 1.0), "spectral")


def build_transformed_ode(lam) -> LinearODE:
    """Transformed ODE in ``x = 2 rho^2/(1 + rho^2)``; singular at 0, 1, 2 and infinity."""
    x = Polynomial.identity("x")
    q = Fraction(1, 4) if isinstance(lam, (int, Fraction)) else 0.25
    c2 = x * x * (1 - x) * (2 - x)
    c1 = x * (1 - (1 + lam) * x * (2 - x))
    c0 = -q * (lam * lam * x * (1 - x) + 9 * x * x - 17 * x + 4)
    return LinearODE(c2, c1, c0, lam, (0.0, 1.0), "transformed")


@dataclass(frozen=True)
class _LocalForm:
    """The ODE at ``x0`` written as ``t^2 q2 y'' + t q1 y' + q0 y = 0``, ``t = x - x0``.

    ``F_i(s) = a[i] s^2 + b[i] s + c[i]`` is the coefficient of the ``t^(n+s)``
    contribution of ``t^(n-i+s)``; ``F_0`` is the indicial polynomial.
    """

    point: float
    a: tuple
    b: tuple
    c: tuple

    def F(self, i, s):
        return (self.a[i] * s + self.b[i]) * s + self.c[i]

    def F_scale(self, i, s):
        return (abs(self.a[i]) * abs(s) + abs(self.b[i])) * abs(s) + abs(self.c[i])

    @property
    def width(self) -> int:
        return len(self.a)


def _local_form(ode: LinearODE, point) -> _LocalForm:
    c2 = ode.c2.shift(point)
    c1 = ode.c1.shift(point)
    c0 = ode.c0.shift(point)
    m = c2.valuation()
    if m == 0:
        raise ValueError(f"{point} is an ordinary point of the ODE")
    n1 = c1.valuation() if c1.degree >= 0 else math.inf
    n0 = c0.valuation() if c0.degree >= 0 else math.inf
    if n1 < m - 1 or n0 < m - 2:
        raise ValueError(f"{point} is an irregular singular point of the ODE")
    # multiply by t^(2-m): t^2 q2 = t^(2-m) c2, t q1 = t^(2-m) c1, q0 = t^(2-m) c0
    q2 = c2.lower(m)
    q1 = c1.lower(m - 1) if c1.degree >= 0 else c1
    q0 = c0.lower(m - 2) if c0.degree >= 0 else c0
    d = max(len(q2.coeffs), len(q1.coeffs), len(q0.coeffs))
    a = tuple(q2.coeff(i) for i in range(d))
    b = tuple(q1.coeff(i) - q2.coeff(i) for i in range(d))
    c = tuple(q0.coeff(i) for i in range(d))
    return _LocalForm(point, a, b, c)


def _sqrt(z):
    if isinstance(z, (mpmath.mpf, mpmath.mpc)):
        return mpmath.sqrt(z)
    if isinstance(z, (int, Fraction)):
        if z >= 0:
            num, den = Fraction(z).numerator, Fraction(z).denominator
            rn, rd = math.isqrt(num), math.isqrt(den)
            if rn * rn == num and rd * rd == den:
                return Fraction(rn, rd)
        z = float(z)
    return cmath.sqrt(z)


def _order_desc(s1, s2):
    return (s1, s2) if complex(s1).real >= complex(s2).real else (s2, s1)


def indicial_exponents(ode: LinearODE, point) -> tuple:
    """Roots of the indicial polynomial at a regular singular point.

    Ordered by descending real part.  Exact coefficients give exact roots when
    the discriminant is a rational square.
    """
    form = _local_form(ode, point)
    A, B, C = form.a[0], form.b[0], form.c[0]
    disc = B * B - 4 * A * C
    root = _sqrt(disc)
    if isinstance(root, Fraction) and isinstance(A, (int, Fraction)) and isinstance(B, (int, Fraction)):
        s1 = (-B + root) / (2 * Fraction(A))
        s2 = (-B - root) / (2 * Fraction(A))
    else:
        s1 = (-B + root) / (2 * A)
        s2 = (-B - root) / (2 * A)
    return _order_desc(s1, s2)


def _integer_gap(s_other, s) -> int | None:
    """Positive integer ``s_other - s`` if there is one."""
    g = s_other - s
    if isinstance(g, (int, Fraction)):
        return int(g) if g == int(g) and g > 0 else None
    gc = complex(g)
    k = round(gc.real)
    if k > 0 and abs(gc - k) < 1e-9:
        return k
    return None


@dataclass(frozen=True)
class FrobeniusSeries:
    """``|t|^exponent * sum(coeffs[n] t^n)`` with ``t = x - point``.

    For ``t < 0`` the factor ``|t|^s`` is the real continuation of ``t^s``; it
    solves the same ODE up to a constant multiple.
    """

    point: float
    exponent: complex
    coeffs: tuple
    radius: float
    form: _LocalForm = field(repr=False, compare=False)

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    def extended(self, n_terms: int) -> FrobeniusSeries:
        if n_terms <= self.n_terms:
            return self
        coeffs = _extend_coeffs(self.form, self.exponent, list(self.coeffs), n_terms)
        return replace(self, coeffs=tuple(coeffs))


def _extend_coeffs(form: _LocalForm, s, coeffs: list, n_terms: int) -> list:
    w = form.width
    for n in range(len(coeffs), n_terms):
        rhs = 0
        scale = 0.0
        for i in range(1, min(n, w - 1) + 1):
            term = coeffs[n - i] * form.F(i, n - i + s)
            rhs = rhs - term
            scale += abs(term)
        d0 = form.F(0, n + s)
        if is_zero(d0, form.F_scale(0, n + s), ZERO_TOL):
            if not is_zero(rhs, scale, 1e-9):
                raise ResonanceObstruction(n, rhs)
            coeffs.append(0 * rhs)  # free coefficient of the larger exponent
        else:
            coeffs.append(rhs / d0)
    return coeffs


def consistency_value(ode: LinearODE, point, exponent):
    """Value that must vanish for a log-free series at ``exponent``.

    Returns ``(k, value)`` where ``k`` is the resonant order (the gap to the
    other indicial exponent) with ``coeffs[0] = 1``, or ``None`` when the
    exponents do not differ by a positive integer.
    """
    form = _local_form(ode, point)
    s_hi, s_lo = indicial_exponents(ode, point)
    other = s_lo if _is_same(exponent, s_hi) else s_hi
    k = _integer_gap(other, exponent)
    if k is None:
        return None
    coeffs = _extend_coeffs(form, exponent, [_one_like(exponent, form)], k) if k > 1 else [_one_like(exponent, form)]
    rhs = 0
    for i in range(1, min(k, form.width - 1) + 1):
        rhs = rhs - coeffs[k - i] * form.F(i, k - i + exponent)
    return k, rhs


def _is_same(a, b) -> bool:
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return a == b
    return abs(complex(a) - complex(b)) < 1e-9


def _one_like(exponent, form):
    coeffs = form.a + form.b + form.c
    if any(isinstance(c, (mpmath.mpf, mpmath.mpc)) for c in coeffs):
        return mpmath.mpf(1)
    if isinstance(exponent, (int, Fraction)) and all(isinstance(c, (int, Fraction)) for c in coeffs):
        return Fraction(1)
    return 1.0


def _radius(ode: LinearODE, point) -> float:
    roots = ode.c2.roots()
    d = [abs(z - complex(point)) for z in roots if abs(z - complex(point)) > 1e-6]
    return min(d) if d else math.inf


def frobenius_series(ode: LinearODE, point, exponent, n_terms: int = 64) -> FrobeniusSeries:
    """Frobenius series at a regular singular point, leading coefficient 1.

    For the smaller of two exponents differing by an integer the series exists
    only when the resonant consistency value vanishes; otherwise
    :class:`ResonanceObstruction` is raised.
    """
    form = _local_form(ode, point)
    if not is_zero(form.F(0, exponent), form.F_scale(0, exponent), ZERO_TOL):
        raise ValueError(f"{exponent!r} is not an indicial exponent at {point}")
    coeffs = _extend_coeffs(form, exponent, [_one_like(exponent, form)], n_terms)
    return FrobeniusSeries(point, exponent, tuple(coeffs), _radius(ode, point), form)


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    derivative: complex
    error: float
    n_terms: int
    converged: bool


def _power_abs(t, s):
    if s == 0:
        return 1
    if t == 0:
        return 0 * t
    return abs(t) ** s


def _partial(coeffs: Sequence, t, start: int, stop: int, s):
    """``sum a_n t^n`` and ``sum (n+s) a_n t^(n-1)`` over ``start <= n < stop``."""
    val = 0
    der = 0
    tp = t**start if start else 1
    tpm = t ** (start - 1) if start >= 1 else None
    for n in range(start, stop):
        a = coeffs[n]
        val = val + a * tp
        if n >= 1:
            if tpm is None:
                tpm = 1
            der = der + (n + s) * a * tpm
            tpm = tpm * t
        elif s != 0 and t != 0:
            der = der + s * a / t
        tp = tp * t
    return val, der


def evaluate_series(s: FrobeniusSeries, at, tol: float = 1e-14, max_terms: int = MAX_TERMS) -> SeriesValue:
    """Partial sum with adaptive doubling of the number of terms.

    Stops once two successive partial sums (and derivatives) differ by less than
    ``tol * max(1, |value|)``; otherwise returns the best value with
    ``converged=False`` and the achieved difference as ``error``.
    """
    t = at - s.point
    if abs(t) >= s.radius:
        raise ValueError(f"evaluation point {at} outside the radius {s.radius} about {s.point}")
    n = max(32, min(s.n_terms, max_terms))
    series = s.extended(n)
    val, der = _partial(series.coeffs, t, 0, n, s.exponent)
    err = math.inf
    while True:
        if 2 * n > max_terms:
            converged = False
            break
        series = series.extended(2 * n)
        dv, dd = _partial(series.coeffs, t, n, 2 * n, s.exponent)
        val, der = val + dv, der + dd
        n *= 2
        err = max(abs(dv) / max(1.0, abs(val)), abs(dd) / max(1.0, abs(der)))
        if err < tol:
            converged = True
            break
    p = _power_abs(t, s.exponent)
    value = p * val
    derivative = p * der
    return SeriesValue(value, derivative, err, n, converged)


def transformation_mismatch(lam, rho, tol: float = 1e-15) -> float:
    """Relative gap between the two analytic solutions at the centre.

    ``v0`` is the exponent-2 series of the spectral ODE about ``rho = 0`` and
    ``y0`` the exponent-1 series of the transformed ODE about ``x = 0``.  With
    ``x = 2 rho^2/(1 + rho^2)`` they are related by
    ``v0 = 2^-((lam+1)/2) (2 - x)^((lam-1)/2) y0``; the prefactor matches the
    unit leading coefficients.  Returns the largest relative difference over
    ``rho``.
    """
    v_ser = frobenius_series(build_spectral_ode(lam), 0.0, 2)
    y_ser = frobenius_series(build_transformed_ode(lam), 0.0, 1)
    worst = 0.0
    for r in rho:
        x = 2 * r * r / (1 + r * r)
        v = complex(evaluate_series(v_ser, r, tol).value)
        y = complex(evaluate_series(y_ser, x, tol).value)
        w = 2 ** (-(lam + 1) / 2) * (2 - x) ** ((lam - 1) / 2) * y
        worst = max(worst, abs(v - w) / abs(v))
    return worst
