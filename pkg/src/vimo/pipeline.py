"""End-to-end extraction pipelines.

Four methods share the preprocessing front end (clutter removal + range
FFT) and differ in how they pick bins and how they turn displacement into
rates:

  pivimo        multi-bin selection, coherent combining, template fit
  msp_fft       multi-bin selection, coherent combining, band-pass spectral peaks
  singlebin_tm  max-variance single bin, template fit
  singlebin_fft max-variance single bin, band-pass spectral peaks
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .binselect import BinSelection, SelectionConfig, candidate_bins, msp_select
from .combine import ChannelEstimate, choose_reference, coherent_combine
from .fit import FitConfig, FitResult, fit_templates
from .preprocess import RangeMap, extract_phase, range_fft, remove_clutter
from .series import DisplacementSeries
from .simulate import IFDataCube

METHODS = ("pivimo", "msp_fft", "singlebin_tm", "singlebin_fft")

MIN_WINDOW_SECONDS = 15.0


@dataclass
class ExtractResult:
    """Everything a method produced for one cube."""

    method: str
    displacement: DisplacementSeries
    resp_rate_bpm: float
    heart_rate_bpm: float
    resp_wave: DisplacementSeries
    heart_wave: DisplacementSeries
    selection: BinSelection | None = None
    estimate: ChannelEstimate | None = None
    fit: FitResult | None = None
    warnings: list[str] = field(default_factory=list)


def max_variance_bin(range_map: RangeMap,
                     sel_config: SelectionConfig | None = None) -> int:
    """Bin with the most vibration: largest unwrapped-phase variance.

    Only bins above the usual energy threshold are scanned.  The phase of
    a near-empty bin is a random walk after unwrapping, so without the
    gate the variance argmax lands on noise at any SNR.  A zero map
    returns bin 0.
    """
    cands = candidate_bins(range_map, sel_config)
    best_bin, best_var = 0, -1.0
    for b in cands:
        col = range_map.bins[:, b]
        phase = np.unwrap(np.angle(col))
        var = float(np.var(phase))
        if var > best_var:
            best_var, best_bin = var, b
    return best_bin


def bandpass_rate(x: DisplacementSeries, band: tuple[float, float],
                  order: int = 4, n_fft: int | None = None,
                  open_low: bool = False):
    """Band-limited spectral-argmax rate estimate.

    Returns (rate_bpm, filtered_series).  The rate comes from the DFT
    magnitude peak inside the band, a zero-phase brick-wall band-pass; an
    IIR filter would smear startup transients across a 15 s window whose
    low corner sits at only 1.5 cycles.  The returned waveform is the
    zero-phase Butterworth band-pass of the series, for display and PCC.

    n_fft pins the rate grid (combining may crop a frame or two off the
    series; padding back keeps the grid at 1/window for every method).
    open_low drops the lower band edge itself, so a respiration line
    sitting exactly on the heart band's 0.8 Hz boundary is not read as a
    heartbeat.  The rate resolution is one DFT bin; no peak interpolation.
    """
    lo, hi = band
    nyq = x.frame_rate / 2.0
    if not 0 < lo < hi < nyq:
        raise ValueError(f"band {band} must sit inside (0, {nyq}) Hz")
    sos = signal.butter(order // 2 or 1, [lo, hi], btype="bandpass",
                        fs=x.frame_rate, output="sos")
    filtered = signal.sosfiltfilt(sos, x.values)
    centered = x.values - x.values.mean()
    n = max(n_fft or len(centered), len(centered))
    spec = np.abs(np.fft.rfft(centered, n=n)) ** 2
    freqs = np.fft.rfftfreq(n, 1.0 / x.frame_rate)
    mask = (freqs > lo) & (freqs <= hi) if open_low \
        else (freqs >= lo) & (freqs <= hi)
    if not np.any(mask) or spec[mask].max() == 0.0:
        return float("nan"), DisplacementSeries(filtered, x.frame_rate)
    f_est = float(freqs[mask][np.argmax(spec[mask])])
    return 60.0 * f_est, DisplacementSeries(filtered, x.frame_rate)


def combined_displacement(cube: IFDataCube,
                          sel_config: SelectionConfig | None = None):
    """Front half of the multi-bin methods: select, align, combine."""
    cfg = cube.config
    cleaned = remove_clutter(cube)
    range_map = range_fft(cleaned)
    cands = candidate_bins(range_map, sel_config)
    selection = msp_select(range_map, cands, sel_config)
    series = [extract_phase(range_map, b) for b in selection.msp_bins]
    estimate = choose_reference(series)
    disp = coherent_combine(range_map, selection, estimate, cfg.lambda_eff)
    return disp, selection, estimate


def single_bin_displacement(cube: IFDataCube,
                            sel_config: SelectionConfig | None = None):
    """Front half of the single-bin baselines."""
    cleaned = remove_clutter(cube)
    range_map = range_fft(cleaned)
    b = max_variance_bin(range_map, sel_config)
    phase = extract_phase(range_map, b)
    disp = DisplacementSeries(
        phase.values * cube.config.lambda_eff / (4.0 * np.pi),
        range_map.frame_rate)
    selection = BinSelection(candidates=[b], msp_bins=[b],
                             detection={b: "fallback"})
    return disp, selection


def extract_vitals(cube: IFDataCube, method: str = "pivimo",
                   sel_config: SelectionConfig | None = None,
                   fit_config: FitConfig | None = None) -> ExtractResult:
    """Run one extraction method on a cube."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    notes: list[str] = []
    if cube.config.window_seconds < MIN_WINDOW_SECONDS:
        msg = (f"window of {cube.config.window_seconds:.1f} s is shorter than "
               f"the {MIN_WINDOW_SECONDS:.0f} s the defaults assume")
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)

    selection = None
    estimate = None
    if method in ("pivimo", "msp_fft"):
        disp, selection, estimate = combined_displacement(cube, sel_config)
    else:
        disp, selection = single_bin_displacement(cube, sel_config)

    fit_result = None
    if method in ("pivimo", "singlebin_tm"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit_result = fit_templates(disp, config=fit_config)
        notes.extend(str(w.message) for w in caught)
        resp_bpm = fit_result.resp_rate_bpm
        heart_bpm = fit_result.heart_rate_bpm
        resp_wave = fit_result.resp_wave
        heart_wave = fit_result.heart_wave
        if not fit_result.converged:
            notes.append("fit stopped at the iteration budget")
    else:
        n = cube.config.n_frames
        resp_bpm, resp_wave = bandpass_rate(disp, (0.1, 0.8), n_fft=n)
        heart_bpm, heart_wave = bandpass_rate(disp, (0.8, 2.0), n_fft=n,
                                              open_low=True)

    return ExtractResult(
        method=method, displacement=disp,
        resp_rate_bpm=resp_bpm, heart_rate_bpm=heart_bpm,
        resp_wave=resp_wave, heart_wave=heart_wave,
        selection=selection, estimate=estimate, fit=fit_result,
        warnings=notes)
