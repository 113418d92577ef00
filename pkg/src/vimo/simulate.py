"""FMCW intermediate-frequency data cube synthesis.

A frame is one chirp; the cube stacks the complex IF samples of M frames
(slow time) by K fast-time samples.  For a scatterer at range R the IF
sample phase is

    phi(t_k, t_m) = 4*pi*R(t_m)/lambda_max + 4*pi*S*R(t_m)*t_k / c

with chirp slope S = bandwidth / chirp_duration and lambda_max the
wavelength at the chirp start frequency.  The quadratic residual term
(4*pi*S*R^2/c^2, some 1e-2 rad at chest ranges) is dropped.

Each scatterer moves as a delayed, gain-scaled copy of one chest waveform,
plus an optional whole-body random motion shared by all scatterers:

    R_i(t_m) = base_range_i + motion_gain_i * x(t_m - motion_delay_i) + rbm(t_m)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .series import DisplacementSeries
from .templates import (TemplateParams, heartbeat_unit_pulse, render_template,
                        respiration_unit_pulse, tile_pulse)

C_LIGHT = 299_792_458.0  # [m/s]

RBM_KINDS = ("none", "sway", "shake")
RBM_DEFAULT_BANDS = {
    "sway": (0.05, 0.3),  # [Hz] slow torso lean
    "shake": (2.0, 5.0),  # [Hz] fast jitter, above the heartbeat band
}
# RMS amplitudes used by the ablation harness and CLI when a grid asks
# for an RBM kind without giving one.  Shake stays small so its
# per-frame range steps respect the lambda/4 tracking budget.
RBM_DEFAULT_AMPLITUDES = {
    "sway": 3.0e-4,   # [m]
    "shake": 1.0e-4,  # [m]
}


@dataclass(frozen=True)
class RadarConfig:
    """FMCW front-end and framing parameters."""

    f_min: float = 60.0e9            # [Hz] chirp start frequency
    bandwidth: float = 4.0e9         # [Hz] swept bandwidth
    chirp_duration: float = 60.0e-6  # [s] single chirp ramp time
    samples_per_chirp: int = 256     # fast-time samples per chirp
    frame_rate: float = 20.0         # [Hz] chirps (frames) per second
    n_frames: int = 300              # slow-time length
    noise_std: float = 0.0           # complex AWGN std per IF sample,
                                     # relative to unit reflection amplitude

    def __post_init__(self):
        if self.f_min <= 0 or self.bandwidth <= 0 or self.chirp_duration <= 0:
            raise ValueError("f_min, bandwidth and chirp_duration must be positive")
        if self.samples_per_chirp < 2 or self.n_frames < 1:
            raise ValueError("samples_per_chirp must be >= 2 and n_frames >= 1")
        if self.frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.chirp_duration * self.frame_rate > 1.0:
            raise ValueError("chirp_duration exceeds the frame interval")

    @property
    def slope(self) -> float:
        """Chirp slope S [Hz/s]."""
        return self.bandwidth / self.chirp_duration

    @property
    def lambda_max(self) -> float:
        """Longest wavelength, at the chirp start frequency [m]."""
        return C_LIGHT / self.f_min

    @property
    def lambda_eff(self) -> float:
        """Wavelength at the mid-chirp frequency [m].

        The slow-time phase of a range bin moves at 4*pi/lambda_eff per
        meter of target motion (the fast-time DFT references the chirp
        center, not its start), so displacement conversions use this.
        """
        k = self.samples_per_chirp
        f_mid = self.f_min + self.bandwidth * (k - 1) / (2.0 * k)
        return C_LIGHT / f_mid

    @property
    def range_resolution(self) -> float:
        """Range bin spacing c/(2B) [m]."""
        return C_LIGHT / (2.0 * self.bandwidth)

    @property
    def max_range(self) -> float:
        """Unambiguous range span of the fast-time DFT [m]."""
        return self.samples_per_chirp * self.range_resolution

    @property
    def window_seconds(self) -> float:
        return self.n_frames / self.frame_rate

    @property
    def fast_times(self) -> np.ndarray:
        """Fast-time sampling instants within one chirp [s]."""
        k = self.samples_per_chirp
        return np.arange(k) * (self.chirp_duration / k)


@dataclass
class ScatterPoint:
    """One reflecting chest patch."""

    base_range: float           # [m] rest range
    amplitude: complex = 1.0    # dimensionless complex reflection weight
    motion_gain: float = 1.0    # scale of the shared chest waveform
    motion_delay: float = 0.0   # [s] lag of this patch behind the waveform

    def __post_init__(self):
        if self.base_range <= 0:
            raise ValueError(f"base_range must be positive, got {self.base_range}")
        if not 0.0 <= self.motion_gain <= 1.0:
            raise ValueError(f"motion_gain must lie in [0, 1], got {self.motion_gain}")
        if abs(self.motion_delay) > 0.25:
            raise ValueError(
                f"motion_delay must lie within +/-0.25 s, got {self.motion_delay}")


@dataclass
class RbmSpec:
    """Band-limited random body movement added to every scatterer."""

    kind: str = "none"
    amplitude: float = 0.0            # [m] RMS displacement
    band: tuple[float, float] | None = None  # [Hz]; default depends on kind
    seed: int = 0

    def __post_init__(self):
        if self.kind not in RBM_KINDS:
            raise ValueError(f"kind must be one of {RBM_KINDS}, got {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.band is not None:
            lo, hi = self.band
            if not 0.0 < lo < hi:
                raise ValueError(f"band must satisfy 0 < low < high, got {self.band}")

    def effective_band(self) -> tuple[float, float] | None:
        if self.kind == "none":
            return None
        return self.band if self.band is not None else RBM_DEFAULT_BANDS[self.kind]


@dataclass
class SceneSpec:
    """Everything the simulator needs besides the radar itself."""

    scatterers: list[ScatterPoint]
    truth_params: TemplateParams = field(default_factory=TemplateParams)
    rbm: RbmSpec | None = None
    noise_seed: int = 0

    def __post_init__(self):
        if not self.scatterers:
            raise ValueError("scene needs at least one scatterer")


@dataclass
class IFDataCube:
    """Complex IF samples, frames (slow time) by samples (fast time)."""

    samples: np.ndarray
    config: RadarConfig

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        expect = (self.config.n_frames, self.config.samples_per_chirp)
        if self.samples.shape != expect:
            raise ValueError(
                f"cube shape {self.samples.shape} does not match config {expect}")


def make_rbm(spec: RbmSpec, frame_rate: float, n_frames: int) -> DisplacementSeries:
    """Band-limited Gaussian random body movement, RMS-normalized.

    White Gaussian noise shaped by a 4th-order Butterworth band-pass
    (applied forward-backward, so no group delay) and rescaled so the RMS
    equals the requested amplitude.  The design corners sit 8% of the
    bandwidth inside the declared band, leaving the transition skirts
    inside it too: the rendered movement keeps at least 95% of its energy
    between the declared edges.
    """
    if spec.kind == "none" or spec.amplitude == 0.0:
        return DisplacementSeries(np.zeros(n_frames), frame_rate)
    lo, hi = spec.effective_band()
    nyq = frame_rate / 2.0
    if hi >= nyq:
        raise ValueError(
            f"rbm band {spec.kind} {(lo, hi)} Hz exceeds the Nyquist rate {nyq} Hz")
    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal(n_frames)
    inset = 0.08 * (hi - lo)
    sos = signal.butter(2, [lo + inset, hi - inset], btype="bandpass",
                        fs=frame_rate, output="sos")
    shaped = signal.sosfiltfilt(sos, white)
    rms = math.sqrt(float(np.mean(shaped ** 2)))
    if rms == 0.0:
        return DisplacementSeries(np.zeros(n_frames), frame_rate)
    return DisplacementSeries(shaped * (spec.amplitude / rms), frame_rate)


def synthesize_chest_motion(params: TemplateParams, frame_rate: float,
                            n_frames: int) -> DisplacementSeries:
    """Ground-truth chest displacement from the template parameters."""
    params.validate()
    if params.T_h > 0 and frame_rate < 4.0 / params.T_h:
        raise ValueError(
            f"frame_rate {frame_rate} Hz undersamples the heartbeat "
            f"(need >= {4.0 / params.T_h:.2f} Hz)")
    values = render_template(params, frame_rate, n_frames / frame_rate)
    return DisplacementSeries(values, frame_rate)


def simulate_if_cube(scatterers, motion, config: RadarConfig, *,
                     rbm: DisplacementSeries | None = None,
                     noise_seed: int = 0) -> IFDataCube:
    """Synthesize a cube from an arbitrary motion function.

    motion: vectorized callable, seconds -> meters, shared by all
    scatterers (each applies its own gain/delay).
    """
    m, k = config.n_frames, config.samples_per_chirp
    t_m = np.arange(m) / config.frame_rate
    t_k = config.fast_times
    rbm_vals = np.zeros(m) if rbm is None else np.asarray(rbm.values, dtype=float)
    if len(rbm_vals) != m:
        raise ValueError(f"rbm length {len(rbm_vals)} does not match n_frames {m}")

    cube = np.zeros((m, k), dtype=complex)
    four_pi = 4.0 * math.pi
    for sc in scatterers:
        if sc.base_range >= config.max_range:
            raise ValueError(
                f"scatterer at {sc.base_range} m is beyond the unambiguous "
                f"range {config.max_range:.2f} m")
        r = sc.base_range + sc.motion_gain * np.asarray(
            motion(t_m - sc.motion_delay), dtype=float) + rbm_vals
        phase0 = four_pi * r / config.lambda_max
        beat = four_pi * config.slope * r / C_LIGHT
        cube += sc.amplitude * np.exp(1j * (phase0[:, None] + beat[:, None] * t_k[None, :]))

    if config.noise_std > 0.0:
        rng = np.random.default_rng(noise_seed)
        scale = config.noise_std / math.sqrt(2.0)
        cube = cube + scale * (rng.standard_normal((m, k))
                               + 1j * rng.standard_normal((m, k)))
    return IFDataCube(cube, config)


def synthesize_if_cube(scene: SceneSpec, config: RadarConfig):
    """Template-driven cube synthesis.

    Returns (cube, truth) where truth is the noiseless chest displacement
    before per-scatterer gains/delays and before any body movement.
    """
    params = scene.truth_params.validate()
    truth = synthesize_chest_motion(params, config.frame_rate, config.n_frames)
    resp_unit = respiration_unit_pulse()
    heart_unit = heartbeat_unit_pulse()

    def motion(t):
        # Evaluate the components at the exact shifted times rather than
        # resampling a rendered grid, so per-scatterer delays stay exact.
        y_res = params.y_off_r + params.A_res * tile_pulse(
            resp_unit, t, params.T_res, params.t_off_r)
        y_h = params.y_off_h + params.A_h * tile_pulse(
            heart_unit, t, params.T_h, params.t_off_h)
        return y_res + y_h + params.c * y_res * y_h

    rbm = None
    if scene.rbm is not None and scene.rbm.kind != "none":
        rbm = make_rbm(scene.rbm, config.frame_rate, config.n_frames)
    cube = simulate_if_cube(scene.scatterers, motion, config,
                            rbm=rbm, noise_seed=scene.noise_seed)
    return cube, truth


def chest_scene(base_range: float, truth_params: TemplateParams | None = None, *,
                n_scatterers: int = 5, chest_width: float = 0.6,
                rbm: RbmSpec | None = None, noise_seed: int = 0) -> SceneSpec:
    """A torso at broadside: scatterers along a chest-wide lateral arc.

    Patches sit at lateral offsets w across the chest, so their ranges are
    sqrt(base_range^2 + w^2) and edge patches reflect less.  A chest at
    0.3 m spans several range bins, at 2 m about one.  Echo voltage falls
    with the square of distance (two-way spreading), applied at the
    torso's nominal range as one common factor so the patch-to-patch
    structure stays purely geometric; with a fixed noise floor a far
    subject is genuinely noisier, near ones cleaner.

    All patches share one radial motion gain of 0.35 and zero lag, a
    deliberate sweet spot.  The ceiling keeps per-frame range steps under
    the lambda/4 tracking budget (~1.2 mm here; the steepest template
    slope reaches ~3.1 mm/frame at full scale, and oblique incidence plus
    tissue damping justify the fraction physically).  The floor comes
    from mean subtraction: the smaller the total phase swing, the closer
    the subtracted slow-time mean sits to the unit circle, and the angle
    of the mean-removed phasor warps sharply near the dwell region.  The
    warp products are respiration-periodic, so at low gain they swamp the
    heartbeat component.  Equal gains matter for a subtler reason: they
    keep a bin's phasor equal to its constant scatterer sum times one
    common modulation, an arc that cannot circle the subtracted mean.
    Patch-to-patch gain or lag differences give the trace enough area
    that large swings occasionally enclose it, and each such loop leaves
    a spurious 2*pi in the unwrapped phase.
    """
    if truth_params is None:
        truth_params = TemplateParams()
    if base_range <= 0:
        raise ValueError(f"base_range must be positive, got {base_range}")
    if n_scatterers < 1:
        raise ValueError("n_scatterers must be >= 1")
    if chest_width < 0:
        raise ValueError("chest_width must be >= 0")
    half = chest_width / 2.0
    lateral = np.linspace(-half, half, n_scatterers) if n_scatterers > 1 else np.zeros(1)
    spreading = 1.0 / base_range ** 2  # [1/m^2] unit echo at 1 m
    scatterers = []
    for w in lateral:
        frac = abs(w) / half if half > 0 else 0.0
        scatterers.append(ScatterPoint(
            base_range=math.hypot(base_range, w),
            amplitude=(1.0 - 0.5 * frac) * spreading,
            motion_gain=0.35,
            motion_delay=0.0,
        ))
    return SceneSpec(scatterers=scatterers, truth_params=truth_params,
                     rbm=rbm, noise_seed=noise_seed)


def confusion_scene(base_range: float = 1.0, *,
                    noise_seed: int = 0) -> SceneSpec:
    """A deep-breathing subject whose heartbeat hides under a harmonic.

    Same geometry as chest_scene, but the motion gain is 0.65 and the
    heartbeat amplitude drops to 0.1 mm.  The respiration pulse train is
    asymmetric, so its spectrum carries a second harmonic at twice the
    breathing rate; with the default 1.25 s period that harmonic lands at
    1.6 Hz, inside the heart band and several times taller than the true
    heart line.  Spectral pickers lock onto it, while the time-domain
    template still separates the two because the harmonic is not free: it
    is phase-locked to the respiration shape the template already spends.

    The larger gain is load-bearing: with a bigger total phase swing the
    slow-time mean sits farther inside the phasor arc, so the angle warp
    that mean subtraction causes stays below the (tiny) heartbeat line
    instead of burying it.
    """
    truth = replace(TemplateParams(), A_h=1.0e-4)  # [m] heartbeat swing
    scene = chest_scene(base_range, truth, noise_seed=noise_seed)
    scatterers = [replace(s, motion_gain=0.65) for s in scene.scatterers]
    return replace(scene, scatterers=scatterers)


def snr_to_noise_std(snr_db: float) -> float:
    """Noise std giving the requested per-sample SNR for a unit scatterer."""
    return 10.0 ** (-snr_db / 20.0)
