"""Lightweight time-series containers shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DisplacementSeries:
    """Chest displacement sampled at the frame rate.

    values: displacement in meters, one entry per frame.
    frame_rate: frames per second.
    """

    values: np.ndarray
    frame_rate: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError(f"values must be 1-D, got shape {self.values.shape}")
        if self.frame_rate <= 0.0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) / self.frame_rate

    @property
    def duration(self) -> float:
        return len(self.values) / self.frame_rate

    def __len__(self):
        return len(self.values)


@dataclass
class PhaseSeries:
    """Unwrapped, mean-removed slow-time phase of one range bin.

    values: phase in radians, one entry per frame.
    bin_index: the range bin the phase was read from.
    frame_rate: frames per second.
    """

    values: np.ndarray
    bin_index: int
    frame_rate: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError(f"values must be 1-D, got shape {self.values.shape}")
        if self.frame_rate <= 0.0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) / self.frame_rate

    def __len__(self):
        return len(self.values)
