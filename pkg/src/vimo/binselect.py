"""Range bin candidate detection and multi-scatter-point selection.

Candidate detection thresholds the per-bin slow-time energy at

    T = mean(E) + alpha * max(E)

and keeps whole contiguous above-threshold runs, so a chest spanning
several bins yields the full run rather than one peak.  Each candidate is
then classified by the spectrum of its unwrapped phase: a bin whose
spectral peak sits in the respiration band with enough in-band energy
concentration counts as a breathing scatter point; otherwise the phase is
high-passed and retested against the heartbeat band.  If nothing passes,
the single highest-energy bin is kept as a fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .preprocess import RangeMap, extract_phase
from .series import PhaseSeries

DETECT_RESPIRATION = "respiration"
DETECT_HEARTBEAT = "heartbeat"
DETECT_FALLBACK = "fallback"


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.20                     # energy threshold weight on max(E)
    th_resp: float = 5.0                    # respiration in/out energy ratio
    th_heart: float = 5.0                   # heartbeat in/out energy ratio
    resp_band: tuple[float, float] = (0.1, 0.8)   # [Hz]
    heart_band: tuple[float, float] = (0.8, 2.0)  # [Hz]
    out_exclude: tuple[float, float] = (0.1, 2.0) # [Hz] band excluded from E_out
    highpass_order: int = 4

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.th_resp <= 0 or self.th_heart <= 0:
            raise ValueError("detection thresholds must be positive")
        for name in ("resp_band", "heart_band", "out_exclude"):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi:
                raise ValueError(f"{name} must satisfy 0 <= low < high")


@dataclass
class BinSelection:
    """Selected bins plus per-bin diagnostics."""

    candidates: list[int]
    msp_bins: list[int]
    detection: dict[int, str]       # bin -> respiration | heartbeat | fallback
    ratios: dict[int, float] = field(default_factory=dict)


def candidate_bins(range_map: RangeMap, config: SelectionConfig | None = None) -> list[int]:
    """Bins in contiguous runs above the mean + alpha*max energy threshold."""
    if config is None:
        config = SelectionConfig()
    energy = range_map.bin_energy()
    if not np.any(energy > 0):
        return []
    threshold = energy.mean() + config.alpha * energy.max()
    return [int(b) for b in np.nonzero(energy > threshold)[0]]


def band_energy_ratio(phase: PhaseSeries, in_band: tuple[float, float],
                      out_exclude: tuple[float, float] = (0.1, 2.0)):
    """In-band to out-of-band energy ratio and spectral peak of a phase series.

    Energies come from the magnitude-squared DFT of the mean-removed phase;
    E_out accumulates everything outside out_exclude (DC excluded).  Returns
    (ratio, f_peak) with ratio = inf when E_out underflows to zero and
    (0.0, nan) for an all-zero series.
    """
    x = phase.values - phase.values.mean()
    if not np.any(x != 0.0):
        return 0.0, float("nan")
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1.0 / phase.frame_rate)
    f_peak = float(freqs[1:][np.argmax(spec[1:])])  # DC bin excluded
    in_lo, in_hi = in_band
    e_in = float(spec[(freqs >= in_lo) & (freqs <= in_hi)].sum())
    out_lo, out_hi = out_exclude
    out_mask = (freqs > 0) & ((freqs < out_lo) | (freqs > out_hi))
    e_out = float(spec[out_mask].sum())
    if e_out == 0.0:
        return float("inf"), f_peak
    return e_in / e_out, f_peak


def _highpass(values: np.ndarray, cutoff: float, frame_rate: float,
              order: int) -> np.ndarray:
    sos = signal.butter(order, cutoff, btype="highpass", fs=frame_rate,
                        output="sos")
    return signal.sosfiltfilt(sos, values)


def msp_select(range_map: RangeMap, candidates: list[int],
               config: SelectionConfig | None = None) -> BinSelection:
    """Classify candidate bins into breathing/heartbeat scatter points.

    A candidate joins the selection if its phase spectrum peaks inside the
    respiration band with in/out ratio >= th_resp, or, after high-pass
    filtering at the heartbeat band edge, peaks inside the heartbeat band
    with ratio >= th_heart.  An empty result falls back to the single
    maximum-energy bin of the map (lowest index on ties).
    """
    if config is None:
        config = SelectionConfig()
    msp_bins: list[int] = []
    detection: dict[int, str] = {}
    ratios: dict[int, float] = {}
    resp_lo, resp_hi = config.resp_band
    heart_lo, heart_hi = config.heart_band

    for b in candidates:
        phase = extract_phase(range_map, b)
        ratio, f_peak = band_energy_ratio(phase, config.resp_band,
                                          config.out_exclude)
        if not math.isnan(f_peak) and resp_lo <= f_peak <= resp_hi \
                and ratio >= config.th_resp:
            msp_bins.append(b)
            detection[b] = DETECT_RESPIRATION
            ratios[b] = ratio
            continue
        filtered = PhaseSeries(
            _highpass(phase.values, heart_lo, phase.frame_rate,
                      config.highpass_order),
            b, phase.frame_rate)
        ratio_h, f_peak_h = band_energy_ratio(
            filtered, config.heart_band, config.heart_band)
        if not math.isnan(f_peak_h) and heart_lo <= f_peak_h <= heart_hi \
                and ratio_h >= config.th_heart:
            msp_bins.append(b)
            detection[b] = DETECT_HEARTBEAT
            ratios[b] = ratio_h
        else:
            ratios[b] = max(ratio, ratio_h) if not math.isnan(f_peak) else 0.0

    if not msp_bins:
        fallback = int(np.argmax(range_map.bin_energy()))
        msp_bins = [fallback]
        detection[fallback] = DETECT_FALLBACK
    return BinSelection(list(candidates), msp_bins, detection, ratios)
