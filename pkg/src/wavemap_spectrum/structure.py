"""Structural facts about the spectrum that can be checked independently.

* ``lam = 1`` is the gauge mode ``rho^2/(1 + rho^2)`` generated by shifting
  the blowup time.
* Under ``mu = lam (2 - lam)`` the problem becomes a Sturm-Liouville problem
  whose ``mu = 1`` solution has no zeros, which rules out ``Re lam > 1``.
* At ``lam = 1 - N`` the point ``x = 1`` is resonant; only ``N = 3`` gives a
  log-free second solution, making ``lam = -2`` an eigenvalue.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .series import (
    ResonanceObstruction,
    build_spectral_ode,
    build_transformed_ode,
    consistency_value,
    evaluate_series,
    frobenius_series,
    indicial_exponents,
)


def gauge_mode(rho):
    """``v = rho^2/(1 + rho^2)`` with its first two derivatives."""
    r2 = rho * rho
    d = 1 + r2
    return r2 / d, 2 * rho / d**2, (2 - 6 * r2) / d**3


def gauge_mode_residual(n_samples: int = 100, perturbation: float = 0.0, include_endpoint: bool = False) -> float:
    """Max residual of the cleared eigenvalue ODE at ``lam = 1`` on the gauge mode.

    ``perturbation`` adds ``perturbation * rho^3`` to the mode (a negative
    control).  Samples are uniform in the open interval unless
    ``include_endpoint`` appends ``rho = 1``.
    """
    if n_samples < 10:
        raise ValueError("n_samples must be at least 10")
    rho = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    if include_endpoint:
        rho = np.append(rho, 1.0)
    v, dv, d2v = gauge_mode(rho)
    v = v + perturbation * rho**3
    dv = dv + 3 * perturbation * rho**2
    d2v = d2v + 6 * perturbation * rho
    ode = build_spectral_ode(1.0)
    return float(np.max(np.abs(ode.residual(rho, v, dv, d2v))))


@dataclass(frozen=True)
class SLProblem:
    """Sturm-Liouville data for a spectral parameter ``mu = lam (2 - lam)``.

    The potential term is ``(1 - rho^2) V / rho^2`` and the weight
    ``(1 - rho^2)^-2``; the checks only need ``mu`` and the exponents of the
    solution at ``rho = 1``.
    """

    lam: complex
    mu: complex
    exponents: tuple

    @staticmethod
    def potential_term(rho):
        r2 = rho * rho
        return (1 - r2) * 2 * (1 - 6 * r2 + r2 * r2) / ((1 + r2) ** 2 * r2)

    @staticmethod
    def weight(rho):
        return 1.0 / (1 - rho * rho) ** 2


def sl_map(lam) -> SLProblem:
    """``mu = lam (2 - lam)`` and the exponents ``(1 +- sqrt(1 - mu))/2`` at ``rho = 1``."""
    mu = lam * (2 - lam)
    root = cmath.sqrt(1 - mu)
    exps = (0.5 * (1 + root), 0.5 * (1 - root))
    if all(abs(e.imag) == 0 for e in exps):
        exps = tuple(e.real for e in exps)
    return SLProblem(lam, mu, exps)


def zero_mode(rho):
    """The ``mu = 1`` solution ``z = sqrt(1 - rho^2) rho^2 / (1 + rho^2)``."""
    return np.sqrt(1 - rho * rho) * rho * rho / (1 + rho * rho)


def sl_gauge_positivity(n_samples: int = 1000, sign: float = 1.0) -> bool:
    """True iff ``sign * z`` is positive at ``n_samples`` points of ``(0, 1)``."""
    rho = np.linspace(0.0, 1.0, n_samples + 2)[1:-1]
    return bool(np.all(sign * zero_mode(rho) > 0))


@dataclass(frozen=True)
class ResonanceReport:
    N: int
    lam: int
    order: int
    value: Fraction
    log_required: bool

    def as_dict(self):
        return {
            "N": self.N,
            "lam": self.lam,
            "order": self.order,
            "value": str(self.value),
            "log_required": self.log_required,
        }


def resonance_check(N: int) -> ResonanceReport:
    """Consistency value at order ``N`` of the exponent-0 series about ``x = 1``.

    Computed in exact rational arithmetic on the transformed ODE at
    ``lam = 1 - N``.  ``N = 1`` (``lam = 0``) is reported as computed.
    """
    if not 1 <= N <= 8:
        raise ValueError("N must lie in 1..8")
    lam = 1 - N
    found = consistency_value(build_transformed_ode(Fraction(lam)), 1, 0)
    if found is None:
        raise ArithmeticError(f"no integer resonance at x = 1 for lam = {lam}")
    order, value = found
    return ResonanceReport(N, lam, order, Fraction(value), value != 0)


def _analytic_branches(ode, point):
    """Frobenius series at ``point`` whose exponents are non-negative integers."""
    out = []
    for s in indicial_exponents(ode, point):
        sc = complex(s)
        k = round(sc.real)
        if k < 0 or abs(sc - k) > 1e-9:
            continue
        try:
            out.append(frobenius_series(ode, point, k))
        except ResonanceObstruction:
            pass
    return out


def apparent_singularity_check(tol: float = 1e-14, lam: float = -2.0, fit_at: float = 0.8, probes=(0.75, 0.85)) -> float:
    """Mismatch of the analytic ``x = 0`` solution against the analytic ``x = 1`` branches.

    The exponent-1 series about ``x = 0`` is fitted (value and derivative at
    ``fit_at``) by the log-free, integer-exponent series about ``x = 1``; the
    return value is the largest relative mismatch at ``probes``.  It is at
    rounding level exactly when every solution analytic at 0 is analytic at 1.
    """
    ode = build_transformed_ode(lam)
    left = frobenius_series(ode, 0.0, 1)
    branches = _analytic_branches(ode, 1.0)

    def values(x):
        a = evaluate_series(left, x, tol)
        b = [evaluate_series(s, x, tol) for s in branches]
        return a, b

    a, b = values(fit_at)
    A = np.array([[complex(v.value) for v in b], [complex(v.derivative) for v in b]])
    rhs = np.array([complex(a.value), complex(a.derivative)])
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    worst = 0.0
    for x in probes:
        a, b = values(x)
        recon = sum(c * complex(v.value) for c, v in zip(coef, b))
        worst = max(worst, abs(complex(a.value) - recon) / abs(complex(a.value)))
    return float(worst)


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    threshold: float
    passed: bool
    detail: str = ""


def run_structural_checks() -> list:
    """All structural checks as :class:`CheckResult` rows (used by ``verify``)."""
    rows = []
    r = gauge_mode_residual(100, include_endpoint=True)
    rows.append(CheckResult("gauge mode residual (lam=1)", r, 1e-12, r < 1e-12))
    r = gauge_mode_residual(100, perturbation=0.01)
    rows.append(CheckResult("perturbed gauge mode (control)", r, 1e-3, r > 1e-3, "must exceed"))
    m = sl_map(1.0)
    rows.append(CheckResult("sl_map(1) = 1", abs(m.mu - 1), 0.0, m.mu == 1))
    ok = sl_gauge_positivity(1000)
    rows.append(CheckResult("mu=1 mode positive on (0,1)", float(ok), 1.0, ok))
    for N in range(1, 9):
        rep = resonance_check(N)
        rows.append(
            CheckResult(
                f"resonance N={N} (lam={rep.lam})",
                float(abs(rep.value)),
                0.0,
                rep.log_required == (N != 3),
                f"value {rep.value}; log required: {rep.log_required}",
            )
        )
    r = apparent_singularity_check(lam=-2.0)
    rows.append(CheckResult("apparent singularity (lam=-2)", r, 1e-8, r < 1e-8))
    r = apparent_singularity_check(lam=-2.5)
    rows.append(CheckResult("generic lam=-2.5 (control)", r, 1e-3, r > 1e-3, "must exceed"))
    return rows
