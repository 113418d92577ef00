"""Tests for candidate detection and scatter-point bin selection."""

import math

import numpy as np
import pytest

from vimo.binselect import (DETECT_FALLBACK, DETECT_HEARTBEAT,
                            DETECT_RESPIRATION, SelectionConfig,
                            band_energy_ratio, candidate_bins, msp_select)
from vimo.preprocess import RangeMap, range_fft, remove_clutter
from vimo.series import PhaseSeries
from vimo.simulate import RadarConfig, ScatterPoint, simulate_if_cube
from vimo.templates import TemplateParams, render_template

CONFIG = RadarConfig()
LAM = CONFIG.lambda_max
CHEST_GAIN = 0.35   # keeps per-frame phase steps under pi, like a real chest


def flat_map(moduli, n_frames=64, frame_rate=20.0):
    """Constant-modulus map with per-bin energy |moduli|^2 * n_frames."""
    moduli = np.asarray(moduli, dtype=float)
    phases = np.exp(1j * 0.37 * np.arange(len(moduli)))
    bins = np.tile(moduli * phases, (n_frames, 1))
    return RangeMap(bins, CONFIG.range_resolution, frame_rate)


def contiguous_runs(indices):
    runs = []
    for b in indices:
        if runs and b == runs[-1][-1] + 1:
            runs[-1].append(b)
        else:
            runs.append([b])
    return runs


def test_isolated_peak_is_sole_candidate():
    moduli = np.full(16, 10 ** (-1.5))   # floor 30 dB below the peak
    moduli[5] = 1.0
    assert candidate_bins(flat_map(moduli)) == [5]


def test_two_targets_give_two_disjoint_runs():
    motion = lambda t: 1e-3 * np.sin(2 * math.pi * 0.3 * np.asarray(t))
    cube = simulate_if_cube([ScatterPoint(0.5), ScatterPoint(1.0)],
                            motion, CONFIG)
    cands = candidate_bins(range_fft(remove_clutter(cube)))
    runs = contiguous_runs(cands)
    assert len(runs) == 2
    assert 13 in runs[0]                 # 0.5 m / 37.5 mm = bin 13.3
    assert 27 in runs[1]                 # 1.0 m / 37.5 mm = bin 26.7
    assert runs[1][0] - runs[0][-1] > 10


def test_saddle_plateau_stays_one_run():
    """Two peaks joined by an above-threshold saddle are one subject, so
    the candidate set must be a single contiguous run, not two singletons."""
    moduli = np.full(16, 1e-3)
    moduli[[6, 7, 8]] = (10.0, 8.0, 10.0)
    cands = candidate_bins(flat_map(moduli))
    assert cands == [6, 7, 8]
    assert len(contiguous_runs(cands)) == 1


def test_zero_map_has_no_candidates():
    assert candidate_bins(flat_map(np.zeros(8))) == []


def test_selection_config_validation():
    with pytest.raises(ValueError):
        SelectionConfig(alpha=-0.1)
    with pytest.raises(ValueError):
        SelectionConfig(th_resp=0.0)
    with pytest.raises(ValueError):
        SelectionConfig(resp_band=(0.8, 0.1))


def test_band_ratio_pure_sinusoid():
    t = np.arange(300) / 20.0            # 15 s @ 20 Hz
    ph = PhaseSeries(np.sin(2 * math.pi * 0.3 * t), 0, 20.0)
    ratio, f_peak = band_energy_ratio(ph, (0.1, 0.8))
    assert abs(f_peak - 0.3) <= 1.0 / 15.0
    assert ratio > 20.0


def test_band_ratio_white_noise_mean():
    # A flat spectrum puts roughly bandwidth fractions of the energy in
    # each region: 0.7 Hz in-band vs the ~8.1 Hz outside [0.1, 2].
    vals = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        ph = PhaseSeries(rng.standard_normal(600), 0, 20.0)
        ratio, _ = band_energy_ratio(ph, (0.1, 0.8))
        vals.append(ratio)
    mean = np.mean(vals)
    assert 0.086 * 0.7 < mean < 0.086 * 1.3


def test_band_ratio_zero_series():
    ratio, f_peak = band_energy_ratio(PhaseSeries(np.zeros(64), 0, 20.0),
                                      (0.1, 0.8))
    assert ratio == 0.0
    assert math.isnan(f_peak)


def test_band_ratio_empty_outband_is_inf():
    # At a 3 Hz frame rate every nonzero frequency lies inside [0.1, 2],
    # so the out-band energy is exactly zero.
    t = np.arange(30) / 3.0
    ph = PhaseSeries(np.sin(2 * math.pi * 0.3 * t), 0, 3.0)
    ratio, f_peak = band_energy_ratio(ph, (0.1, 0.8))
    assert math.isinf(ratio)
    assert abs(f_peak - 0.3) < 0.11


def template_noise_map(seed, n_frames=600, frame_rate=20.0):
    """Three bins carrying the chest-gain-scaled breathing template at
    10 dB SNR plus four bins of pure noise at the same floor."""
    x = CHEST_GAIN * render_template(TemplateParams(), frame_rate,
                                     n_frames / frame_rate)
    sig = np.exp(1j * 4 * math.pi * x / LAM)
    noise_std = 10 ** (-10 / 20)
    rng = np.random.default_rng(seed)
    bins = (noise_std / math.sqrt(2)) * (
        rng.standard_normal((n_frames, 7))
        + 1j * rng.standard_normal((n_frames, 7)))
    for j, th in zip((2, 3, 4), (0.0, 1.1, 2.2)):
        bins[:, j] += sig * np.exp(1j * th)
    return RangeMap(bins, CONFIG.range_resolution, frame_rate)


def test_msp_exact_selection_rate():
    hits = 0
    for seed in range(100):
        sel = msp_select(template_noise_map(seed), list(range(7)))
        hits += sorted(sel.msp_bins) == [2, 3, 4]
    assert hits >= 95


def test_msp_signal_bins_detected_as_respiration():
    rmap = template_noise_map(0)
    assert candidate_bins(rmap) == [2, 3, 4]
    sel = msp_select(rmap, list(range(7)))
    assert sel.msp_bins == [2, 3, 4]
    assert all(sel.detection[b] == DETECT_RESPIRATION for b in (2, 3, 4))
    assert all(sel.ratios[b] >= 5.0 for b in (2, 3, 4))


def test_msp_all_noise_falls_back_to_max_energy():
    rng = np.random.default_rng(0)
    bins = rng.standard_normal((600, 5)) + 1j * rng.standard_normal((600, 5))
    bins[:, 3] *= 2.0
    sel = msp_select(RangeMap(bins, CONFIG.range_resolution, 20.0),
                     list(range(5)))
    assert sel.msp_bins == [3]
    assert sel.detection[3] == DETECT_FALLBACK


def test_msp_empty_candidates_fall_back():
    moduli = np.full(6, 0.1)
    moduli[2] = 1.0
    sel = msp_select(flat_map(moduli), [])
    assert sel.msp_bins == [2]
    assert sel.detection[2] == DETECT_FALLBACK


def test_msp_heartbeat_only_uses_heartbeat_branch():
    x = CHEST_GAIN * render_template(TemplateParams(A_res=0.0), 20.0, 30.0)
    bins = np.zeros((600, 3), dtype=complex)
    bins[:, 1] = np.exp(1j * 4 * math.pi * x / LAM)
    sel = msp_select(RangeMap(bins, CONFIG.range_resolution, 20.0), [1])
    assert sel.msp_bins == [1]
    assert sel.detection[1] == DETECT_HEARTBEAT


def test_selection_is_scale_invariant():
    rmap = template_noise_map(7)
    scaled = RangeMap(rmap.bins * 3.7, rmap.bin_spacing, rmap.frame_rate)
    c1, c2 = candidate_bins(rmap), candidate_bins(scaled)
    assert c1 == c2
    s1 = msp_select(rmap, c1)
    s2 = msp_select(scaled, c2)
    assert s1.msp_bins == s2.msp_bins
    assert s1.detection == s2.detection


def test_raising_th_resp_shrinks_respiration_set():
    t = np.arange(600) / 20.0
    clean = np.sin(2 * math.pi * 0.3 * t)
    rng = np.random.default_rng(3)
    noisy = clean + 0.3 * rng.standard_normal(600)   # ratio lands in (5, 20)
    bins = np.zeros((600, 4), dtype=complex)
    bins[:, 1] = np.exp(1j * clean)
    bins[:, 2] = np.exp(1j * noisy)
    rmap = RangeMap(bins, CONFIG.range_resolution, 20.0)

    def resp_set(th):
        sel = msp_select(rmap, [1, 2], SelectionConfig(th_resp=th))
        return {b for b, d in sel.detection.items() if d == DETECT_RESPIRATION}

    low, high = resp_set(5.0), resp_set(20.0)
    assert high < low
    assert low == {1, 2}
    assert high == {1}
