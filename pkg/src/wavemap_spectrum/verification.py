"""Cross-module checks behind ``verify``: minimal-solution dichotomy and oracle agreement."""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor

from .contfrac import find_real_eigenvalues, minimal_ratio_test
from .shooting import oracle_eigenvalues
from .structure import (
    CheckResult,
    apparent_singularity_check,
    gauge_mode_residual,
    resonance_check,
    sl_gauge_positivity,
    sl_map,
)

CHECKS = ("gauge", "sl", "resonance", "apparent", "minimal", "oracle")


def gauge_rows():
    r = gauge_mode_residual(100, include_endpoint=True)
    c = gauge_mode_residual(100, perturbation=0.01)
    return [
        CheckResult("gauge mode residual (lam=1)", r, 1e-12, r < 1e-12),
        CheckResult("perturbed gauge mode (control)", c, 1e-3, c > 1e-3, "must exceed"),
    ]


def random_dyadic_lams(n: int, seed: int = 0, bits: int = 20):
    """Random complex ``lam`` on a ``2**-bits`` grid, where ``2 - lam`` and ``mu`` are exact."""
    rng = random.Random(seed)
    q = 2**bits
    return [complex(rng.randint(-15 * q, 5 * q) / q, rng.randint(-5 * q, 5 * q) / q) for _ in range(n)]


def sl_rows(n_random: int = 100, seed: int = 0):
    worst = 0.0
    for lam in random_dyadic_lams(n_random, seed):
        worst = max(worst, abs(sl_map(lam).mu - sl_map(2 - lam).mu))
    one = sl_map(1.0).mu
    return [
        CheckResult("sl_map symmetry mu(lam) = mu(2-lam)", worst, 0.0, worst == 0.0, f"{n_random} random dyadic lam"),
        CheckResult("sl_map(1) = 1", abs(one - 1), 0.0, one == 1),
        CheckResult("mu=1 mode positive on (0,1)", 1.0, 1.0, sl_gauge_positivity(1000)),
        CheckResult("negated mode (control)", 0.0, 1.0, not sl_gauge_positivity(1000, sign=-1.0), "must be false"),
    ]


def resonance_rows(n_range=(1, 8)):
    rows = []
    for N in range(n_range[0], n_range[1] + 1):
        rep = resonance_check(N)
        rows.append(
            CheckResult(
                f"resonance N={N} (lam={rep.lam})",
                float(abs(rep.value)),
                0.0,
                rep.log_required == (N != 3),
                f"consistency value {rep.value}; log required: {rep.log_required}",
            )
        )
    return rows


def apparent_rows():
    a = apparent_singularity_check(lam=-2.0)
    c = apparent_singularity_check(lam=-2.5)
    t = apparent_singularity_check(lam=1.0)
    return [
        CheckResult("apparent singularity (lam=-2)", a, 1e-8, a < 1e-8),
        CheckResult("generic lam=-2.5 (control)", c, 1e-3, c > 1e-3, "must exceed"),
        CheckResult("lam=1 minimal series y=x", t, 1e-8, t < 1e-8),
    ]


def _ratio(lam):
    return minimal_ratio_test(lam)


def minimal_probes(lam_min: float = -12.5, lam_max: float = 1.5):
    """Eigenvalues in range and the midpoints between neighbours."""
    roots = [float(r.lam) for r in find_real_eigenvalues(lam_min, lam_max, confirm=False)]
    mids = [0.5 * (a + b) for a, b in zip(roots, roots[1:])]
    return roots, mids


def minimal_rows(lam_min: float = -12.5, lam_max: float = 1.5, jobs: int = 1, tol: float = 1e-3):
    """Ratio plateau within ``tol`` of 1/2 at each eigenvalue and of 1 at each midpoint."""
    roots, mids = minimal_probes(lam_min, lam_max)
    probes = roots + mids
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            tests = list(pool.map(_ratio, probes))
    else:
        tests = [_ratio(x) for x in probes]
    rows = []
    for lam, t in zip(probes, tests):
        target = 0.5 if lam in roots else 1.0
        dev = abs(complex(t.plateau) - target) if not t.terminating else 0.0
        kind = "eigenvalue" if target == 0.5 else "midpoint"
        detail = f"{t.classification}, plateau {complex(t.plateau).real:.6f}, {t.digits} digits"
        if t.terminating:
            detail = "terminating series (polynomial minimal solution)"
        rows.append(CheckResult(f"ratio at {kind} {lam:.6f}", dev, tol, dev < tol, detail))
    return rows


def oracle_pairs(window=(-7.5, 1.5), midpoint: float = 0.5):
    """Match shooting roots to continued-fraction roots in the window."""
    cf = [float(r.lam) for r in find_real_eigenvalues(window[0], window[1], confirm=False)]
    sh = [float(r.lam) for r in oracle_eigenvalues(window[0], window[1], midpoint=midpoint)]
    pairs = []
    for s in sh:
        best = min(cf, key=lambda c: abs(c - s)) if cf else float("nan")
        pairs.append((s, best, abs(s - best)))
    return cf, sh, pairs


def oracle_rows(window=(-7.5, 1.5), tol: float = 1e-6):
    cf, sh, pairs = oracle_pairs(window)
    rows = [
        CheckResult(f"shooting {s:.8f} vs CF {c:.8f}", d, tol, d < tol) for s, c, d in pairs
    ]
    rows.append(
        CheckResult("oracle root count matches CF", float(len(sh)), float(len(cf)), len(sh) == len(cf),
                    f"{len(sh)} shooting, {len(cf)} continued fraction")
    )
    return rows


def run_checks(checks=CHECKS, n_range=(1, 8), window=(-7.5, 1.5), jobs: int = 1):
    rows = []
    for name in checks:
        if name == "gauge":
            rows += gauge_rows()
        elif name == "sl":
            rows += sl_rows()
        elif name == "resonance":
            rows += resonance_rows(n_range)
        elif name == "apparent":
            rows += apparent_rows()
        elif name == "minimal":
            rows += minimal_rows(jobs=jobs)
        elif name == "oracle":
            rows += oracle_rows(window)
        else:
            raise ValueError(f"unknown check {name!r}")
    return rows
