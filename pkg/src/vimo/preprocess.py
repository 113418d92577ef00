"""Cube preprocessing: clutter removal, range FFT, phase extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import PhaseSeries
from .simulate import IFDataCube, RadarConfig


@dataclass
class RangeMap:
    """Complex range profile per frame: frames (slow time) by range bins."""

    bins: np.ndarray
    bin_spacing: float   # [m] range per bin, c/(2B)
    frame_rate: float    # [Hz]

    def __post_init__(self):
        self.bins = np.asarray(self.bins)
        if self.bins.ndim != 2:
            raise ValueError(f"bins must be 2-D, got shape {self.bins.shape}")
        if self.bin_spacing <= 0 or self.frame_rate <= 0:
            raise ValueError("bin_spacing and frame_rate must be positive")

    @property
    def n_frames(self) -> int:
        return self.bins.shape[0]

    @property
    def n_bins(self) -> int:
        return self.bins.shape[1]

    def bin_energy(self) -> np.ndarray:
        """Slow-time energy per range bin."""
        return np.sum(np.abs(self.bins) ** 2, axis=0)


def remove_clutter(cube: IFDataCube) -> IFDataCube:
    """Subtract the slow-time mean per fast-time sample.

    Static reflections contribute a constant per fast-time sample across
    frames, so the per-column mean removes them while leaving moving-target
    modulation (minus its own tiny mean) intact.
    """
    cleaned = cube.samples - cube.samples.mean(axis=0, keepdims=True)
    return IFDataCube(cleaned, cube.config)


def range_fft(cube: IFDataCube, window: str = "rectangular") -> RangeMap:
    """DFT along fast time, one range profile per frame.

    Bin n corresponds to range n * c/(2B).  The orthonormal DFT scaling
    keeps the map energy equal to the (windowed) cube energy.  A Hann
    window trades resolution for lower leakage sidelobes.
    """
    k = cube.config.samples_per_chirp
    if window == "rectangular":
        data = cube.samples
    elif window == "hann":
        data = cube.samples * np.hanning(k)[None, :]
    else:
        raise ValueError(f"unknown window {window!r} (use 'rectangular' or 'hann')")
    bins = np.fft.fft(data, axis=1, norm="ortho")
    return RangeMap(bins, cube.config.range_resolution, cube.config.frame_rate)


def extract_phase(range_map: RangeMap, bin_index: int) -> PhaseSeries:
    """Unwrapped, mean-removed slow-time phase of one range bin.

    Unwrapping (pi jump threshold) runs before mean removal, so the mean
    is taken over the continuous phase track.
    """
    if not 0 <= bin_index < range_map.n_bins:
        raise IndexError(
            f"bin {bin_index} out of range for map with {range_map.n_bins} bins")
    phase = np.unwrap(np.angle(range_map.bins[:, bin_index]))
    phase = phase - phase.mean()
    return PhaseSeries(phase, bin_index, range_map.frame_rate)
