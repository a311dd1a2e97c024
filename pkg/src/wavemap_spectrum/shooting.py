"""Shooting to a midpoint: Wronskian of the two endpoint-analytic series.

``v0`` is the exponent-2 series about ``rho = 0`` and ``v1`` the exponent-0
series about ``rho = 1``; ``lam`` is an eigenvalue when they are linearly
dependent, i.e. when their Wronskian vanishes at an interior point.  Only the
analytic branch is launched from ``rho = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .contfrac import EigenRecord, EigenScan, bracket_secant, real_grid
from .series import (
    ResonanceObstruction,
    _integer_gap,
    build_spectral_ode,
    consistency_value,
    evaluate_series,
    frobenius_series,
    indicial_exponents,
)

METHOD = "shooting"
WINDOW = (-7.5, 1.5)
_EXCLUDE = 1e-7


@dataclass(frozen=True)
class WronskianProbe:
    lam: complex
    midpoint: float
    n_terms: tuple
    W: complex
    W_normalized: complex
    error: float
    low_confidence: bool
    branch: str = "exponent-0"


def _analytic_right(ode, midpoint, tol, max_terms):
    """Analytic solution(s) at ``rho = 1`` evaluated at the midpoint.

    Returns ``(branch, [SeriesValue, ...])``: one branch normally, the
    exponent-0 and exponent-N series when ``lam = 1 - N`` makes ``rho = 1`` an
    apparent singularity, and the exponent-N series alone when the exponent-0
    series needs a logarithm.
    """
    s_hi, _ = indicial_exponents(ode, 1.0)
    gap = _integer_gap(s_hi, 0)
    try:
        base = evaluate_series(frobenius_series(ode, 1.0, 0), midpoint, tol, max_terms)
    except ResonanceObstruction:
        top = evaluate_series(frobenius_series(ode, 1.0, s_hi), midpoint, tol, max_terms)
        return "exponent-N", [top]
    if gap is None:
        return "exponent-0", [base]
    top = evaluate_series(frobenius_series(ode, 1.0, s_hi), midpoint, tol, max_terms)
    return "apparent", [base, top]


def normalized_wronskian(v0, d0, v1, d1):
    """``(v0 d1 - d0 v1, W / (|v0||d1| + |d0||v1|))``; the second is invariant under rescaling."""
    W = v0 * d1 - d0 * v1
    return W, W / (abs(v0) * abs(d1) + abs(d0) * abs(v1))


def wronskian_mid(lam, midpoint: float = 0.5, tol: float = 1e-14, max_terms: int = 2**16) -> WronskianProbe:
    """``W = v0 v1' - v0' v1`` at ``midpoint`` plus its scale-free normalisation.

    At an apparent singularity every solution is analytic at ``rho = 1``; the
    free resonant coefficient is then fixed to match ``v0``, so ``W = 0``
    whenever such a matching analytic solution exists.
    """
    if not 0 < midpoint < 1:
        raise ValueError("midpoint must lie in (0, 1)")
    ode = build_spectral_ode(lam)
    left = evaluate_series(frobenius_series(ode, 0.0, 2), midpoint, tol, max_terms)
    branch, rights = _analytic_right(ode, midpoint, tol, max_terms)
    wr = [left.value * r.derivative - left.derivative * r.value for r in rights]
    val, der = rights[0].value, rights[0].derivative
    if branch == "apparent":
        c = -wr[0] / wr[1]
        val, der = val + c * rights[1].value, der + c * rights[1].derivative
    W, Wn = normalized_wronskian(left.value, left.derivative, val, der)
    return WronskianProbe(
        lam,
        midpoint,
        (left.n_terms, max(r.n_terms for r in rights)),
        W,
        Wn,
        max([left.error] + [r.error for r in rights]),
        not (left.converged and all(r.converged for r in rights)),
        branch,
    )


def _wn(lam: float, midpoint: float, tol: float) -> float:
    return float(np.real(wronskian_mid(lam, midpoint, tol).W_normalized))


def apparent_resonances(lam_min: float, lam_max: float) -> list:
    """Integers ``lam = 1 - N`` in range whose resonance at ``rho = 1`` is log-free."""
    out = []
    for lam in range(math.ceil(lam_min), math.floor(lam_max) + 1):
        if lam > 0:
            continue
        k, value = consistency_value(build_spectral_ode(Fraction(lam)), 1, 0)
        if value == 0:
            out.append(lam)
    return out


def oracle_eigenvalues(
    lam_min: float,
    lam_max: float,
    scan_step: float = 0.02,
    tol: float = 1e-9,
    midpoint: float = 0.5,
    window: tuple = WINDOW,
) -> EigenScan:
    """Real zeros of the normalised midpoint Wronskian, sorted descending.

    Restricted to the window where the double-precision series converge
    reliably; for anything outside it use the continued-fraction solver.
    The exponent-0 branch at ``rho = 1`` has a pole in ``lam`` at each
    logarithmic resonance ``lam = 1 - N``, so the normalised Wronskian flips
    sign there without vanishing; those brackets go to ``skipped``.  Apparent
    resonances, where matching is solvable through the free coefficient, are
    probed directly.  Sign changes elsewhere that do not polish to
    ``|W_norm| < tol`` go to ``failures``.
    """
    if lam_min < window[0] or lam_max > window[1]:
        raise ValueError(
            f"shooting is reliable only on [{window[0]}, {window[1]}]; "
            "use find_real_eigenvalues (continued fraction) outside it"
        )
    grid = real_grid(lam_min, lam_max, scan_step)
    apparent = apparent_resonances(lam_min, lam_max)
    vals = [_wn(float(x), midpoint, 1e-14) for x in grid]
    fn = lambda x: _wn(x, midpoint, 1e-14)  # noqa: E731
    records, failures, skipped = [], [], []
    for lam in apparent:
        resid = abs(fn(float(lam)))
        if resid < tol:
            records.append(EigenRecord(float(lam), resid, METHOD, (float(lam), float(lam)), 0))
    for i in range(len(grid) - 1):
        a, b, fa, fb = float(grid[i]), float(grid[i + 1]), vals[i], vals[i + 1]
        if not (fa == 0 or fa * fb < 0):
            continue
        hit = [k for k in range(math.ceil(b - 1e-9), math.floor(a + 1e-9) + 1) if k <= 0]
        pieces = [(a, b, fa, fb)]
        if hit:
            k = hit[0]
            reason = "probed directly" if k in apparent else "normalisation sign flip at logarithmic resonance"
            skipped.append({"bracket": (b, a), "lam": float(k), "reason": reason})
            pieces = []
            for lo, hi in ((b, k - _EXCLUDE), (k + _EXCLUDE, a)):
                if hi - lo > _EXCLUDE:
                    pieces.append((hi, lo, fn(hi), fn(lo)))
        for a, b, fa, fb in pieces:
            if not (fa == 0 or fa * fb < 0):
                continue
            root, its = bracket_secant(fn, a, b, fa, fb)
            resid = abs(fn(root))
            if resid < tol:
                records.append(EigenRecord(root, resid, METHOD, (b, a), its))
            else:
                failures.append({"bracket": (b, a), "lam": root, "reason": f"|W_norm| = {resid:.3e} (jump, not a zero)"})
    if vals[-1] == 0:
        records.append(EigenRecord(float(grid[-1]), 0.0, METHOD, (grid[-1], grid[-1]), 0))
    records.sort(key=lambda r: -r.lam)
    out = []
    for r in records:
        if all(abs(r.lam - o.lam) > 1e-9 for o in out):
            out.append(r)
    return EigenScan(out, failures, skipped)


def polish_shooting_root(lam0: float, midpoint: float, half_width: float = 1e-4, tol: float = 1e-9) -> float:
    """Re-polish a known root with a different matching point.

    Roots at apparent resonances carry no sign change and are re-probed in
    place instead.  Returns ``nan`` when no root is confirmed.
    """
    k = round(lam0)
    if abs(lam0 - k) < _EXCLUDE and k in apparent_resonances(k, k):
        return float(k) if abs(_wn(float(k), midpoint, 1e-14)) < tol else math.nan
    a, b = lam0 - half_width, lam0 + half_width
    fa, fb = _wn(a, midpoint, 1e-14), _wn(b, midpoint, 1e-14)
    if fa * fb > 0:
        return math.nan
    root, _ = bracket_secant(lambda x: _wn(x, midpoint, 1e-14), a, b, fa, fb)
    return root
