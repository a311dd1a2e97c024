import math

import numpy as np
import pytest

from conftest import LAM1
from wavemap_spectrum.blowup import (
    FitError,
    _Operator,
    advance_window,
    detect_blowup,
    energy,
    evolve,
    fit_mode,
    grid,
    make_initial_data,
    mode_profile,
    self_similar_profile,
    similarity_frame,
    synthetic_frames,
    thin_frames,
)

RHO = np.linspace(0.0, 1.0, 101)


def test_initial_data_validation():
    with pytest.raises(ValueError):
        make_initial_data("plane-wave")
    with pytest.raises(ValueError):
        make_initial_data("exact-self-similar", T=-1.0)
    with pytest.raises(ValueError, match="not resolved"):
        make_initial_data("gaussian-lump", R=1.0, n=10, amplitude=50.0)
    s = make_initial_data("truncated", R=4.0, n=400, T=1.0)
    assert s.u[0] == 0 and s.u[-1] == 0 and np.all(s.u[s.r <= 2] == 2 * np.arctan(s.r[s.r <= 2]))


def test_operator_exact_on_linear_profile():
    r = grid(1.0, 100)
    a = 1e-3
    acc = _Operator(r).accel(a * r)
    ri = r[1:-1]
    assert np.allclose(acc[1:-1], 2 * a / ri - np.sin(2 * a * ri) / ri**2, rtol=1e-9, atol=1e-12)


def test_zero_data_stays_zero():
    traj = evolve(make_initial_data("zero", R=2.0, n=200), t_end=1.0)
    assert traj.status == "completed"
    assert all(np.all(s.u == 0) for s in traj.snapshots)
    assert not detect_blowup(traj).blowup


def test_energy_scaling():
    a = make_initial_data("gaussian-lump", R=3.0, n=600, amplitude=1.0, width=1.0)
    b = make_initial_data("gaussian-lump", R=6.0, n=600, amplitude=0.5, width=2.0)
    assert energy(b) == pytest.approx(2 * energy(a), rel=1e-12)


def test_scaling_covariance_of_evolution():
    a = evolve(make_initial_data("gaussian-lump", R=3.0, n=300, amplitude=1.0, width=1.0), t_end=1.0, snapshot_every=20)
    b = evolve(make_initial_data("gaussian-lump", R=6.0, n=300, amplitude=0.5, width=2.0), t_end=2.0, snapshot_every=20)
    for sa, sb in zip(a.snapshots, b.snapshots):
        assert sb.t == pytest.approx(2 * sa.t)
        assert np.allclose(sa.u, sb.u, atol=1e-12)


def test_exact_self_similar(exact_run):
    est = detect_blowup(exact_run)
    assert exact_run.status == "resolution-limit"
    assert est.blowup and abs(est.T - 1) < 1e-3 and est.uncertainty < 1e-3
    frames = similarity_frame(exact_run, 1.0, RHO)
    assert frames and all(f.U[0] == 0 for f in frames)
    # the profile error is discretisation, about 0.075 (h / (T - t))^2
    resolved = similarity_frame(exact_run, 1.0, RHO, min_scale=30)
    assert max(np.max(np.abs(f.U - self_similar_profile(RHO))) for f in resolved) < 1e-4
    assert max(np.max(np.abs(f.U - self_similar_profile(RHO))) for f in frames) < 5e-3
    assert exact_run.energy_drift() < 1e-3


def test_truncated_matches_exact():
    traj = evolve(make_initial_data("truncated", R=4.0, n=2000, T=1.0), t_end=1.0, snapshot_every=50)
    assert abs(detect_blowup(traj).T - 1) < 1e-3


def test_shifted_blowup_time_is_absorbed():
    traj = evolve(make_initial_data("exact-self-similar", R=4.0, n=2000, T=1.05), t_end=1.1, snapshot_every=50)
    assert abs(detect_blowup(traj).T - 1.05) < 1e-3


def test_dispersing_runs(dispersing_runs):
    drifts = []
    for n, traj in dispersing_runs.items():
        assert traj.status == "completed" and not detect_blowup(traj).blowup
        drifts.append(traj.energy_drift())
    assert max(drifts) < 1e-3
    assert drifts[0] / drifts[1] == pytest.approx(4, rel=0.1)
    assert drifts[1] / drifts[2] == pytest.approx(4, rel=0.1)


def test_thin_frames():
    frames = synthetic_frames(np.arange(0, 1, 0.01), np.ones_like(RHO), RHO)
    kept = thin_frames(frames, 0.1)
    assert all(b.tau - a.tau >= 0.1 - 1e-12 for a, b in zip(kept, kept[1:]))


def test_single_mode_recovery():
    mode = mode_profile(LAM1, RHO)
    assert np.max(np.abs(mode)) == pytest.approx(1.0)
    fit = fit_mode(synthetic_frames(np.arange(0, 5, 0.1), mode, RHO, 0.1, LAM1), mode)
    assert abs(fit.c1 - 0.1) < 1e-6 and abs(fit.lam_fit - LAM1) < 1e-6
    assert np.max(fit.shape_residuals) < 1e-10


def test_fit_errors():
    mode = mode_profile(LAM1, RHO)
    with pytest.raises(FitError):
        fit_mode(synthetic_frames(np.arange(0, 0.3, 0.1), mode, RHO), mode)
    wrong = np.cos(4 * np.pi * RHO)
    with pytest.raises(FitError, match="shape"):
        fit_mode(synthetic_frames(np.arange(0, 5, 0.1), wrong, RHO), mode)


def test_window_advances_past_second_mode():
    mode = mode_profile(LAM1, RHO)
    two = synthetic_frames(np.arange(0, 10, 0.05), mode, RHO, 0.1, LAM1, extra=[(1.0, -2.0, mode_profile(-2.0, RHO))])
    early = fit_mode(two, mode)
    late = advance_window(two, mode)
    assert abs(late.lam_fit - LAM1) < 1e-3 < abs(early.lam_fit - LAM1)


@pytest.mark.slow
def test_large_data_run(large_run):
    traj, an = large_run
    assert traj.status == "resolution-limit" and an.estimate.blowup
    assert abs(an.T - an.estimate.T) < 1e-3
    assert abs(an.fit.lam_fit - LAM1) < 0.15 * abs(LAM1)
    assert abs(an.fit_gauge.lam_fit - LAM1) < 0.05 * abs(LAM1)
    assert an.monotone and an.deviation[-1] < an.deviation[0]
    assert traj.energy_drift() < 1e-3
    assert math.isfinite(an.fit.c1)
