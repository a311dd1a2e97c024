import random

import mpmath
import numpy as np
import pytest

from conftest import REFERENCE
from wavemap_spectrum.contfrac import (
    CFConvergenceError,
    cf_ratio,
    eigen_fn,
    eigenmode,
    find_complex_eigenvalues,
    find_real_eigenvalues,
    forward_ratios,
    minimal_coefficients,
    minimal_ratio_test,
    recurrence_coeffs,
    secular_fn,
    seed_ratio,
)


def backward_oracle(lam, N=10_000, dps=80, nudge=0):
    """``a_2/a_1`` of the minimal solution: recur downward from ``a_N = 0, a_{N-1} = 1``.

    ``nudge`` moves ``lam`` off points where some ``p0(n)`` vanishes.
    """
    with mpmath.workdps(dps):
        lam = mpmath.mpf(lam) + nudge
        hi, mid = mpmath.mpf(0), mpmath.mpf(1)  # a_{n+2}, a_{n+1}
        for n in range(N - 2, 0, -1):
            p0, p1, p2 = recurrence_coeffs(lam, n)
            hi, mid = mid, -(p2 * hi + p1 * mid) / p0
        return hi / mid


def test_recurrence_examples():
    assert recurrence_coeffs(0.37, 0)[2] == 20
    assert recurrence_coeffs(1, 0)[1] == 0
    assert recurrence_coeffs(1, 1)[0] == 0
    for n in range(20):
        lam = 0.3 + n
        p0, _, p2 = recurrence_coeffs(lam, n)
        assert p2 > 0
        assert p0 == pytest.approx((2 * n + lam - 3) * (2 * n + lam + 3))


def test_seed_identity():
    rng = random.Random(1)
    for _ in range(100):
        lam = rng.uniform(-13, 3)
        _, p1, p2 = recurrence_coeffs(lam, 0)
        assert -p1 / p2 == pytest.approx(seed_ratio(lam), rel=1e-15, abs=1e-15)


def test_cf_ratio_examples():
    assert cf_ratio(1.0).value == 0
    r = cf_ratio(-2.0)
    assert r.converged and r.value == pytest.approx(-1.05, abs=1e-13)


@pytest.mark.parametrize("lam, nudge", [(0.3, 0), (-0.4, 0), (-5.5, 0), (-9.0, mpmath.mpf("1e-40")), (1.7, 0)])
def test_cf_ratio_matches_backward_oracle(lam, nudge):
    res = cf_ratio(lam, tol=1e-14)
    assert res.converged
    assert abs(res.value - float(backward_oracle(lam, nudge=nudge))) < 10 * 1e-14 * max(1.0, abs(res.value))


def test_eigen_fn_examples():
    assert abs(eigen_fn(1.0)) < 1e-10
    assert abs(eigen_fn(-2.0)) < 1e-10
    assert abs(eigen_fn(-9.0)) > 1e-2
    assert seed_ratio(-9.0) == 0


def test_eigen_fn_reports_non_convergence():
    with pytest.raises(CFConvergenceError):
        eigen_fn(-0.3, n_max=64)


def test_secular_fn_shares_zeros():
    for lam in (1.0, -2.0, -0.5424663534):
        assert abs(secular_fn(lam, 512)) < 1e-9
    grid = np.linspace(1.05, 5.0, 396)
    assert np.min(np.abs([eigen_fn(x) for x in grid])) > 1e-3


def test_table_scan(table_scan):
    assert len(table_scan) == 12
    assert not table_scan.failures
    for rec, ref in zip(table_scan, REFERENCE):
        assert abs(float(rec.lam) - ref) < 5e-6
        assert rec.residual < 1e-10
        assert rec.minimality.classification == "minimal"
        assert rec.method == "continued-fraction"
    lams = [float(r.lam) for r in table_scan]
    assert lams == sorted(lams, reverse=True)


def test_tail_start_stability(table_scan):
    for rec in table_scan:
        again = find_real_eigenvalues(float(rec.lam) - 0.01, float(rec.lam) + 0.01,
                                      tail_start=2 * (rec.tail_start or 512), confirm=False)
        assert len(again) == 1 and abs(float(again[0].lam) - float(rec.lam)) < 1e-9


def test_small_ranges():
    one = find_real_eigenvalues(-0.6, -0.5)
    assert len(one) == 1 and abs(float(one[0].lam) + 0.542466) < 5e-7
    assert len(find_real_eigenvalues(1.05, 10.0)) == 0
    with pytest.raises(ValueError):
        find_real_eigenvalues(1.0, 0.0)


def test_complex_seed_near_real_root_is_discarded():
    search = find_complex_eigenvalues((0.5, 1.5), (0.05, 0.5), seeds=[1 + 0.1j])
    assert len(search) == 0 and search.n_real == 1
    assert abs(search.real_roots[0] - 1) < 1e-8


def test_complex_upper_band_empty(complex_upper):
    assert len(complex_upper) == 0
    assert complex_upper.n_seeds == 1800


def test_ratio_test():
    assert minimal_ratio_test(1.0).terminating
    m = minimal_ratio_test(-0.5424663534)
    assert m.classification == "minimal" and abs(complex(m.plateau) - 0.5) < 1e-3
    d = minimal_ratio_test(-0.4, n_probe=500)
    assert d.classification == "dominant"
    # the dominant solution grows like n^(lam - 2), so 1 - r_n ~ (2 - lam)/n
    r, _ = forward_ratios(-0.4, 5000)
    assert (1 - r[500]) * 500 == pytest.approx(2.4, rel=1e-2)
    assert abs(complex(minimal_ratio_test(-0.4).plateau) - 1) < 1e-3


def test_eigenmode_gauge_and_normalisation():
    rho = np.linspace(0, 1, 51)
    assert np.allclose(eigenmode(1.0, rho), rho**2 / (1 + rho**2), atol=1e-14)
    v = eigenmode(-0.5424663534, rho, normalize=True)
    assert np.max(np.abs(v[1:] / rho[1:])) == pytest.approx(1.0)
    a = minimal_coefficients(-2.0, 50)
    assert a[0] == 1 and a[1] == pytest.approx(-1.05)
