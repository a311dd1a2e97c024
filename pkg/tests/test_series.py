import math
import random
from fractions import Fraction

import numpy as np
import pytest

from wavemap_spectrum.series import (
    ResonanceObstruction,
    build_spectral_ode,
    build_transformed_ode,
    evaluate_series,
    frobenius_series,
    indicial_exponents,
    potential,
    potential_rational,
    transformation_mismatch,
)


def test_potential_values():
    assert potential(0.0) == 2.0
    assert potential(1.0) == pytest.approx(-2.0, abs=1e-15)
    rho = np.linspace(0, 1, 101)
    for r in rho:
        assert abs(potential(r)) <= 2 + 1e-15
        assert potential(r) * (1 + r * r) ** 2 == pytest.approx(2 * (1 - 6 * r * r + r**4), abs=1e-13)
        assert potential_rational(r) == pytest.approx(potential(r), abs=1e-14)


def test_spectral_ode_at_lam_zero():
    ode = build_spectral_ode(0)
    assert ode.c1.degree == -1
    roots = ode.singular_points()
    inside = sorted({round(z.real, 9) for z in roots if abs(z.imag) < 1e-9 and -1e-9 <= z.real <= 1 + 1e-9})
    assert inside == [0.0, 1.0]


@pytest.mark.parametrize(
    "build, point, lam, expected",
    [
        (build_spectral_ode, 0, Fraction(1, 3), (2, -1)),
        (build_spectral_ode, 1, Fraction(-2), (3, 0)),
        (build_spectral_ode, 1, Fraction(1, 2), (Fraction(1, 2), 0)),
        (build_transformed_ode, 0, Fraction(-3, 2), (1, Fraction(-1, 2))),
        (build_transformed_ode, 1, Fraction(-4), (5, 0)),
    ],
)
def test_indicial_exponents(build, point, lam, expected):
    assert indicial_exponents(build(lam), point) == expected


def test_transformed_ode_constant_term():
    assert build_transformed_ode(Fraction(7, 3)).c0.coeff(0) == -1


def test_gauge_series_alternates():
    s = frobenius_series(build_spectral_ode(Fraction(1)), 0, 2, n_terms=12)
    assert list(s.coeffs) == [(-1) ** (k // 2) if k % 2 == 0 else 0 for k in range(12)]
    assert complex(evaluate_series(s, 0.5).value) == pytest.approx(0.2, abs=1e-15)


def test_terminating_transformed_series():
    s = frobenius_series(build_transformed_ode(Fraction(1)), 0, 1, n_terms=20)
    assert s.coeffs[0] == 1 and all(c == 0 for c in s.coeffs[1:])
    assert complex(evaluate_series(s, 0.7).value) == pytest.approx(0.7, abs=1e-15)


def test_resonant_smaller_exponent_is_obstructed():
    with pytest.raises(ResonanceObstruction) as exc:
        frobenius_series(build_spectral_ode(Fraction(-1)), 1, 0)
    assert exc.value.index == 2


def test_non_indicial_exponent_rejected():
    with pytest.raises(ValueError):
        frobenius_series(build_spectral_ode(0.3), 0, 1)


def test_out_of_radius_rejected():
    s = frobenius_series(build_spectral_ode(0.3), 1.0, 0)
    assert s.radius == pytest.approx(1.0)
    with pytest.raises(ValueError):
        evaluate_series(s, -0.1)


def test_edge_of_radius_is_flagged():
    s = frobenius_series(build_spectral_ode(-0.3), 0.0, 2)
    v = evaluate_series(s, 0.99, tol=1e-15, max_terms=256)
    assert not v.converged and v.error > 1e-15


def test_clearing_denominators_is_sound():
    rng = random.Random(3)
    for _ in range(200):
        lam, rho = rng.uniform(-5, 1), rng.uniform(0.05, 0.95)
        s = frobenius_series(build_spectral_ode(lam), 0.0, 2)
        e = evaluate_series(s, rho)
        v, dv = complex(e.value).real, complex(e.derivative).real
        d2v = rng.uniform(-1, 1)  # any value: the identity is linear in (v, v', v'')
        w = rho**2 * (1 + rho**2) ** 2
        raw = -(1 - rho**2) * d2v + 2 * lam * rho * dv + (lam * (lam - 1) + potential(rho) / rho**2) * v
        cleared = build_spectral_ode(lam).residual(rho, v, dv, d2v)
        assert cleared == pytest.approx(w * raw, rel=1e-12, abs=1e-13)


def test_transformation_consistency():
    rng = random.Random(0)
    rho = np.linspace(0.1, 0.9, 9)
    assert max(transformation_mismatch(rng.uniform(-5, 1), rho) for _ in range(10)) < 1e-10
