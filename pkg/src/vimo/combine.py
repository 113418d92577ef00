"""Coherent combining of the selected range bins.

The selected bins carry delayed, phase-rotated copies of the same chest
motion.  Pairwise normalized cross-correlation of their phase series finds
the best-connected bin to act as the reference and the per-bin delays;
each bin's complex series is then advanced by its delay (whole frames),
rotated onto the reference's carrier phase, and the bins are averaged with
equal gain.  The phase of the average, unwrapped and mean-removed, scales
to displacement by wavelength/(4*pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binselect import BinSelection
from .preprocess import RangeMap, extract_phase
from .series import DisplacementSeries, PhaseSeries


@dataclass
class ChannelEstimate:
    """Reference choice and per-bin alignment against it."""

    bins: list[int]
    reference_bin: int
    delays: np.ndarray        # [s] per bin, positive = bin lags the reference
    correlations: np.ndarray  # peak normalized correlation vs the reference

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.correlations = np.asarray(self.correlations, dtype=float)
        if not (len(self.bins) == len(self.delays) == len(self.correlations)):
            raise ValueError("bins, delays and correlations must align")
        if self.reference_bin not in self.bins:
            raise ValueError(f"reference bin {self.reference_bin} not in bins")


def pairwise_xcorr(a: PhaseSeries, b: PhaseSeries, max_lag: float = 1.0):
    """Peak normalized cross-correlation and its lag in seconds.

    Positive lag means b is delayed relative to a.  Each lag is normalized
    over the overlapping segments, so two identical series score exactly
    (1.0, 0.0).  Ties prefer the smallest |lag|.  Zero-variance input gives
    (0.0, 0.0).
    """
    if a.frame_rate != b.frame_rate:
        raise ValueError("series frame rates differ")
    x = a.values - a.values.mean()
    y = b.values - b.values.mean()
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    max_shift = min(int(round(max_lag * a.frame_rate)), n - 1)
    best_corr, best_lag = 0.0, 0
    found = False
    for lag in range(-max_shift, max_shift + 1):
        if lag >= 0:
            xs, ys = x[:n - lag], y[lag:]
        else:
            xs, ys = x[-lag:], y[:n + lag]
        denom = np.sqrt(np.dot(xs, xs) * np.dot(ys, ys))
        if denom == 0.0:
            continue
        corr = float(np.dot(xs, ys) / denom)
        better = corr > best_corr + 1e-12
        tie = abs(corr - best_corr) <= 1e-12 and abs(lag) < abs(best_lag)
        if not found or better or tie:
            best_corr, best_lag, found = corr, lag, True
    if not found:
        return 0.0, 0.0
    return best_corr, best_lag / a.frame_rate


def choose_reference(series: list[PhaseSeries],
                     max_lag: float = 1.0) -> ChannelEstimate:
    """Pick the bin best correlated with all others and measure delays.

    The reference maximizes the summed pairwise peak correlation against
    the rest (lowest bin index on exact ties); delays and correlations are
    then recomputed for every bin against that reference.
    """
    if not series:
        raise ValueError("need at least one phase series")
    bins = [s.bin_index for s in series]
    n = len(series)
    if n == 1:
        return ChannelEstimate(bins, bins[0], np.zeros(1), np.ones(1))

    peak = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            corr, _ = pairwise_xcorr(series[i], series[j], max_lag)
            peak[i, j] = peak[j, i] = corr
    scores = peak.sum(axis=1) - 1.0  # drop the self term
    ref = int(np.argmax(scores))     # argmax takes the first (lowest) on ties

    delays = np.zeros(n)
    corrs = np.zeros(n)
    for j in range(n):
        if j == ref:
            corrs[j] = 1.0
            continue
        corrs[j], delays[j] = pairwise_xcorr(series[ref], series[j], max_lag)
    return ChannelEstimate(bins, bins[ref], delays, corrs)


def coherent_combine(range_map: RangeMap, selection: BinSelection,
                     estimate: ChannelEstimate,
                     wavelength: float) -> DisplacementSeries:
    """Equal-gain average of the aligned complex bins, as displacement.

    Each bin is advanced by its whole-frame delay (edges clipped from all
    bins alike so lengths stay equal), rotated onto the reference bin's
    carrier phase, and averaged.  The averaged phase is unwrapped,
    mean-removed and scaled by wavelength/(4*pi) into meters.
    """
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if list(estimate.bins) != list(selection.msp_bins):
        raise ValueError("estimate bins do not match the selection")
    m = range_map.n_frames
    shifts = [int(round(d * range_map.frame_rate)) for d in estimate.delays]
    lo = max(0, -min(shifts))
    hi = m - max(0, max(shifts))
    if hi - lo < 2:
        raise ValueError("delays leave fewer than 2 overlapping frames")

    ref_pos = estimate.bins.index(estimate.reference_bin)
    aligned = []
    for b, shift in zip(estimate.bins, shifts):
        col = range_map.bins[:, b]
        aligned.append(col[lo + shift: hi + shift])
    ref_col = aligned[ref_pos]
    total = np.zeros(hi - lo, dtype=complex)
    for col in aligned:
        rot = np.vdot(col, ref_col)  # sum conj(col) * ref
        if abs(rot) > 0.0:
            col = col * (rot / abs(rot))
        total += col
    avg = total / len(aligned)

    phase = np.unwrap(np.angle(avg))
    phase = phase - phase.mean()
    return DisplacementSeries(phase * wavelength / (4.0 * np.pi),
                              range_map.frame_rate)
