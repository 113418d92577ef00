"""Tests for template initialization and the trust-region fitter."""

import math
import warnings

import numpy as np
import pytest

from vimo.fit import (FitConfig, FitResult, ParamBounds, TemplateObjective,
                      extract_rates, fd_gradient, fit_templates,
                      heart_grid_candidates, init_heart, init_resp,
                      initial_params, tr_least_squares)
from vimo.series import DisplacementSeries
from vimo.simulate import RbmSpec, make_rbm
from vimo.templates import TemplateParams, render_template

FRAME_RATE = 20.0
FIG4 = TemplateParams(c=2500.0)


def series(params, duration=15.0, frame_rate=FRAME_RATE):
    return DisplacementSeries(render_template(params, frame_rate, duration),
                              frame_rate)


def circ_dist(a, b, period):
    d = abs(a - b) % period
    return min(d, period - d)


# ---------------------------------------------------------------------------
# Generic optimizer
# ---------------------------------------------------------------------------

def test_tr_quadratic_bowl_exact():
    target = np.array([0.3, -0.2, 0.7])
    res = tr_least_squares(lambda v: v - target, np.zeros(3),
                           -np.ones(3), np.ones(3))
    assert res.converged
    np.testing.assert_allclose(res.v, target, atol=1e-10)
    assert res.sse < 1e-20


def test_tr_rosenbrock_against_box_face():
    # The unconstrained minimum (1, 1) lies outside the y <= 0.8 face; the
    # constrained solution must sit on it with every trial point feasible.
    lo = np.array([-2.0, -1.0])
    hi = np.array([2.0, 0.8])
    seen = []

    def rosen(v):
        seen.append(np.array(v, copy=True))
        return np.array([10.0 * (v[1] - v[0] ** 2), 1.0 - v[0]])

    res = tr_least_squares(rosen, np.array([-1.0, 0.0]), lo, hi)
    assert res.converged
    assert abs(res.v[1] - 0.8) < 1e-9
    assert res.sse < 0.02
    assert all(np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12)
               for p in seen)
    assert all(b < a for a, b in
               zip(res.sse_history, res.sse_history[1:]))


def test_tr_sse_tol_gates_termination():
    lo = np.array([-2.0, -1.0])
    hi = np.array([2.0, 0.8])

    def rosen(v):
        return np.array([10.0 * (v[1] - v[0] ** 2), 1.0 - v[0]])

    loose = tr_least_squares(rosen, np.array([-1.0, 0.0]), lo, hi,
                             sse_tol=1e-2)
    tight = tr_least_squares(rosen, np.array([-1.0, 0.0]), lo, hi,
                             sse_tol=1e-12)
    assert loose.converged and tight.converged
    assert loose.n_iters <= tight.n_iters
    assert tight.sse <= loose.sse
    # the stopping rule: the last accepted step improved by less than the tol
    assert loose.sse_history[-2] - loose.sse_history[-1] < 1e-2


def test_tr_rejects_bad_bounds():
    with pytest.raises(ValueError):
        tr_least_squares(lambda v: v, np.zeros(2),
                         np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_fd_gradient_schemes():
    def f(v):
        return float(np.sin(v[0]) * v[1] ** 2 + 0.5 * v[2] ** 2
                     + v[0] * v[2])

    v0 = np.array([0.4, -1.3, 0.9])
    g_true = np.array([math.cos(0.4) * 1.69 + 0.9,
                       -2.6 * math.sin(0.4), 1.3])
    g_central = fd_gradient(f, v0, rel_step=1e-6)
    g_forward = fd_gradient(f, v0, rel_step=1e-6, scheme="forward")
    err_c = np.abs(g_central - g_true).max()
    err_f = np.abs(g_forward - g_true).max()
    assert err_c < 1e-8
    assert err_f < 1e-4
    assert err_c < err_f
    with pytest.raises(ValueError):
        fd_gradient(f, v0, scheme="midpoint")


# ---------------------------------------------------------------------------
# Respiration initialization
# ---------------------------------------------------------------------------

def test_init_resp_clean_long_period():
    t_res, t_off = init_resp(series(TemplateParams(T_res=4.0)))
    assert abs(t_res - 4.0) <= 0.05
    assert 0.0 <= t_off < t_res


def test_init_resp_coupled_waveform():
    # With c=2500 the coupling term shifts the first autocorrelation peak:
    # the estimate lands at 1.19 s rather than 1.25, and the descent is what
    # restores the true period (see test_noiseless_fit_is_a_fixed_point).
    t_res, _ = init_resp(series(FIG4))
    assert abs(t_res - 1.25) <= 0.06


def test_init_resp_white_noise_falls_back():
    for seed in (0, 1, 2):
        x = DisplacementSeries(
            np.random.default_rng(seed).normal(0.0, 1e-3, 300), FRAME_RATE)
        with pytest.warns(UserWarning, match="no periodicity peak"):
            t_res, _ = init_resp(x)
        assert 1.0 <= t_res <= 10.0


def test_init_resp_short_window_warns():
    x = series(TemplateParams(T_res=9.0))
    with pytest.warns(UserWarning, match="under two periods"):
        t_res, _ = init_resp(x)
    assert 7.0 <= t_res <= 10.0


# ---------------------------------------------------------------------------
# Heartbeat initialization
# ---------------------------------------------------------------------------

def test_init_heart_grid_locates_pulse():
    # Respiration side held at its true values; the coarse grid must land
    # within one period cell of T_h = 0.59.  The offset compensates the
    # pulse-train drift of the off-grid period (~0.094 s over 25 beats), so
    # it sits within two offset cells of zero rather than one.
    resp_partial = TemplateParams(A_h=5e-4, A_res=3e-3, T_h=0.875,
                                  T_res=1.25, c=0.0)
    t_h, t_off = init_heart(series(FIG4), resp_partial)
    assert abs(t_h - 0.59) <= 0.03125
    assert circ_dist(t_off, 0.0, t_h) <= 0.07


def test_init_heart_flat_grid_tie_break():
    # A zeroed heartbeat unit makes every grid entry identical, so the
    # lexicographic tie-break returns the smallest period and offset.
    x = series(FIG4)
    config = FitConfig(heart_unit=np.zeros(32))
    resp_partial = TemplateParams(A_h=5e-4, A_res=3e-3, T_h=0.875,
                                  T_res=1.25, c=0.0)
    with pytest.warns(UserWarning, match="nearly flat"):
        t_h, t_off = init_heart(x, resp_partial, config)
    assert (t_h, t_off) == (0.5, 0.0)


def test_heart_candidates_are_period_diverse():
    config = FitConfig()
    x = series(FIG4)
    p0 = initial_params(x)
    cands = heart_grid_candidates(x, p0, config)
    assert 1 <= len(cands) <= config.multistart
    periods = [t_h for t_h, _ in cands]
    for i, a in enumerate(periods):
        for b in periods[i + 1:]:
            assert abs(a - b) >= config.heart_sep * min(a, b)
    # the true-period basin is probed even when the argmin is elsewhere
    assert any(abs(t_h - 0.59) < 0.05 for t_h in periods)


# ---------------------------------------------------------------------------
# Full fit
# ---------------------------------------------------------------------------

def test_noiseless_fit_is_a_fixed_point():
    x = series(FIG4)
    res = fit_templates(x, init=FIG4)
    assert res.sse == 0.0
    assert res.converged
    assert res.n_iters == 1
    np.testing.assert_array_equal(res.params.to_vector(), FIG4.to_vector())


def test_fit_recovers_coupled_truth():
    res = fit_templates(series(FIG4))
    assert abs(res.params.T_res - 1.25) < 1e-6
    assert abs(res.params.T_h - 0.59) < 1e-6
    assert res.sse < 1e-15


def test_fit_monte_carlo_20db():
    clean = render_template(FIG4, FRAME_RATE, 15.0)
    sigma = float(np.std(clean)) * 10 ** (-20 / 20)
    hits = 0
    for seed in range(100):
        noise = np.random.default_rng(seed).normal(0.0, sigma, clean.size)
        p = fit_templates(DisplacementSeries(clean + noise, FRAME_RATE)).params
        if (abs(p.T_res - 1.25) / 1.25 <= 0.02
                and abs(p.T_h - 0.59) / 0.59 <= 0.03):
            hits += 1
    assert hits >= 90


def test_fit_survives_shake_movement():
    clean = render_template(FIG4, FRAME_RATE, 15.0)
    truth_bpm = 60.0 / 0.59
    errs = []
    for seed in range(50):
        rbm = make_rbm(RbmSpec("shake", 1.0e-4, seed=seed), FRAME_RATE,
                       clean.size)
        res = fit_templates(DisplacementSeries(clean + rbm.values,
                                               FRAME_RATE))
        errs.append(abs(res.heart_rate_bpm - truth_bpm) / truth_bpm * 100)
    assert float(np.median(errs)) <= 5.0


def test_amplitude_scale_equivariance_uncoupled():
    # With c = 0 the amplitudes are identified: scaling the waveform by k
    # scales A_res and A_h by k and leaves the periods and offsets alone.
    xa = series(TemplateParams())
    xb = DisplacementSeries(2.0 * xa.values, FRAME_RATE)
    pa = fit_templates(xa).params
    pb = fit_templates(xb).params
    assert abs(pb.A_res / pa.A_res - 2.0) < 0.01
    assert abs(pb.A_h / pa.A_h - 2.0) < 0.01
    assert abs(pb.T_res - pa.T_res) < 1e-4
    assert abs(pb.T_h - pa.T_h) < 1e-4
    assert circ_dist(pb.t_off_r, pa.t_off_r, pa.T_res) < 1e-3
    assert circ_dist(pb.t_off_h, pa.t_off_h, pa.T_h) < 1e-3
    for p in (pa, pb):
        assert abs(p.y_off_r + p.y_off_h) < 1e-6
        assert abs(p.c) < 1.0


def test_coupling_counter_scales():
    # When c != 0 only the waveform is identified, not the amplitude split
    # (y = r + h + c*r*h admits an exact reparameterization family), but
    # scaling the data by k must still send c to c/k and fix the periods.
    xa = series(FIG4)
    xb = DisplacementSeries(2.0 * xa.values, FRAME_RATE)
    ra, rb = fit_templates(xa), fit_templates(xb)
    assert ra.sse < 1e-15 and rb.sse < 1e-15
    assert abs(rb.params.c / ra.params.c - 0.5) < 1e-6
    assert abs(rb.params.T_res - ra.params.T_res) < 1e-6
    assert abs(rb.params.T_h - ra.params.T_h) < 1e-6


def test_objective_algebra():
    x = series(FIG4, duration=5.0)
    obj = TemplateObjective(x, FitConfig())
    v = TemplateParams(A_res=2e-3, T_res=1.4).to_vector()
    res = obj.residuals(v)
    np.testing.assert_allclose(res, obj.model(v) - x.values)
    assert obj.sse(v) == pytest.approx(float(res @ res))


# ---------------------------------------------------------------------------
# Rate extraction
# ---------------------------------------------------------------------------

def _result_for(params):
    zeros = DisplacementSeries(np.zeros(8), FRAME_RATE)
    return FitResult(params=params, sse=0.0, converged=True, n_iters=1,
                     sse_history=[0.0], resp_wave=zeros, heart_wave=zeros)


def test_extract_rates_values():
    resp_bpm, heart_bpm, at_bounds = extract_rates(
        _result_for(TemplateParams(T_res=4.0, T_h=0.59,
                                   t_off_h=0.1, t_off_r=0.2)))
    assert resp_bpm == pytest.approx(15.0)
    assert heart_bpm == pytest.approx(60.0 / 0.59)
    assert at_bounds == ()


def test_extract_rates_flags_bound_hits():
    _, _, at_bounds = extract_rates(_result_for(TemplateParams(T_res=10.0)))
    assert "T_res" in at_bounds
    lo, hi = ParamBounds().arrays()
    assert np.all(hi > lo)
