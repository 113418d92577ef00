"""Physiological motion templates.

Two unit pulses (one respiration cycle, one heartbeat cycle) and a renderer
that tiles them into a chest displacement waveform

    y(t) = y_res(t) + y_h(t) + c * y_res(t) * y_h(t)

where each component is an amplitude-scaled, time-offset periodic extension
of its unit pulse plus a value offset.

The respiration pulse is the lung volume response of a first-order
resistance/compliance airway model driven by one breath of pleural pressure:
a quadratic pressure rise during inspiration followed by an exponential
discharge during expiration.  The heartbeat pulse is one period of a Van der
Pol limit cycle, which reproduces the sharp systolic kick of chest-surface
heart vibration.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline


class CoefficientError(ValueError):
    """Raised when pulse coefficients produce an inconsistent waveform."""


class SolverError(RuntimeError):
    """Raised when the oscillator integration fails to settle on a cycle."""


# Fitted/fitted-against parameter order, shared with the fit module.
PARAM_NAMES = (
    "A_h", "A_res", "T_h", "T_res",
    "t_off_h", "t_off_r", "y_off_h", "y_off_r", "c",
)

# Hard constraint box on the four physiological parameters.
A_H_BOUNDS = (0.0, 1.0e-3)     # [m] heartbeat displacement amplitude
A_RES_BOUNDS = (0.0, 1.0e-2)   # [m] respiration displacement amplitude
T_H_BOUNDS = (0.5, 1.25)       # [s] heartbeat period (48..120 bpm)
T_RES_BOUNDS = (1.0, 10.0)     # [s] respiration period (6..60 bpm)


@dataclass(frozen=True)
class RespirationModelCoeffs:
    """Coefficients of the pressure-driven lung volume model.

    Times are in units of one period (the pulse is later stretched to the
    requested period), and the airway resistance is absorbed into the
    pressure scale since the pulse is amplitude-normalized anyway.
    """

    a0: float = 0.0             # pressure polynomial constant term
    a1: float = 1.0             # pressure polynomial linear term
    a2: float | None = None     # quadratic term; default places the pressure
                                # peak one volume-lag before end of inspiration
    insp_fraction: float = 0.4  # inspiratory fraction of the period
    tau: float | None = None    # expiratory pressure discharge constant;
                                # default 0.3 * expiratory duration
    tau_rs: float = 0.1         # airway RC time constant

    def __post_init__(self):
        if not 0.0 < self.insp_fraction < 1.0:
            raise CoefficientError(
                f"insp_fraction must lie in (0, 1), got {self.insp_fraction}")
        if self.tau is not None and self.tau <= 0.0:
            raise CoefficientError(f"tau must be positive, got {self.tau}")
        if self.tau_rs <= 0.0:
            raise CoefficientError(f"tau_rs must be positive, got {self.tau_rs}")
        if math.isclose(self.tau_eff, self.tau_rs, rel_tol=1e-9):
            raise CoefficientError(
                "tau and tau_rs must differ (degenerate expiratory solution)")

    # -- derived quantities ------------------------------------------------

    @property
    def t1(self) -> float:
        """End of inspiration."""
        return self.insp_fraction

    @property
    def t2(self) -> float:
        """Expiratory duration."""
        return 1.0 - self.insp_fraction

    @property
    def tau_eff(self) -> float:
        return 0.3 * self.t2 if self.tau is None else self.tau

    @property
    def a2_eff(self) -> float:
        if self.a2 is not None:
            return self.a2
        # Volume lags pressure by about tau_rs, so peak the pressure early
        # to keep the volume maximum inside the inspiratory segment.
        t_peak = self.t1 - self.tau_rs
        if t_peak <= 0.0:
            t_peak = 0.5 * self.t1
        return -self.a1 / (2.0 * t_peak)

    def pressure(self, t):
        """Driving pressure over one period (piecewise, vectorized)."""
        t = np.asarray(t, dtype=float)
        insp = self.a0 + self.a1 * t + self.a2_eff * t * t
        p1 = self.a0 + self.a1 * self.t1 + self.a2_eff * self.t1 ** 2
        exp_ = p1 * np.exp(-(t - self.t1) / self.tau_eff)
        return np.where(t <= self.t1, insp, exp_)

    def volume_constants(self):
        """Closed-form constants for the two volume branches.

        Inspiration:  v(t) = q1*t^2 + q2*t + a4 + a3*exp(-t/tau_rs)
        Expiration:   v(t) = b1*exp(-(t-t1)/tau) + b2*exp(-(t-t1)/tau_rs)

        with the start volume fixed by periodicity v(0) = v(t1 + t2).
        """
        a2 = self.a2_eff
        ts = self.tau_rs
        tau = self.tau_eff
        # Particular polynomial solution of v' + v/tau_rs = P/1.
        big_a1 = a2
        big_a2 = self.a1 - 2.0 * a2 * ts
        big_a3 = self.a0 - self.a1 * ts + 2.0 * a2 * ts * ts
        q1 = ts * big_a1
        q2 = ts * big_a2
        a4 = ts * big_a3

        p1 = self.a0 + self.a1 * self.t1 + a2 * self.t1 ** 2
        b1 = p1 / (1.0 / ts - 1.0 / tau)

        e1 = math.exp(-self.t1 / ts)      # inspiratory homogeneous decay
        e2 = math.exp(-self.t2 / ts)
        et = math.exp(-self.t2 / tau)
        poly_t1 = q1 * self.t1 ** 2 + q2 * self.t1 + a4
        # Periodic start volume: v(0) = v(t1 + t2).
        v0 = (b1 * (et - e2) + (poly_t1 - a4 * e1) * e2) / (1.0 - e1 * e2)
        a3 = v0 - a4
        v_t1 = poly_t1 + a3 * e1
        b2 = v_t1 - b1
        return {
            "A1": big_a1, "A2": big_a2, "A3": big_a3,
            "a1": q1, "a2": q2, "a3": a3, "a4": a4,
            "b1": b1, "b2": b2, "V0": v0, "P_t1": p1, "V_t1": v_t1,
        }

    def volume(self, t):
        """Lung volume over one period (closed form, vectorized)."""
        c = self.volume_constants()
        t = np.asarray(t, dtype=float)
        insp = (c["a1"] * t * t + c["a2"] * t + c["a4"]
                + c["a3"] * np.exp(-t / self.tau_rs))
        s = t - self.t1
        exp_ = (c["b1"] * np.exp(-s / self.tau_eff)
                + c["b2"] * np.exp(-s / self.tau_rs))
        gap = abs(
            (c["a1"] * self.t1 ** 2 + c["a2"] * self.t1 + c["a4"]
             + c["a3"] * math.exp(-self.t1 / self.tau_rs)) - c["V_t1"])
        if gap > 1e-9 * max(abs(c["V_t1"]), 1e-30):
            raise CoefficientError(
                f"volume branches disagree at the junction by {gap:.3e}")
        return np.where(t <= self.t1, insp, exp_)


@dataclass(frozen=True)
class HeartModelCoeffs:
    """Van der Pol oscillator settings: v'' - epsilon*(1 - v^2)*v' + v = 0."""

    epsilon: float = 5.0       # nonlinearity; >= 1 gives the sharp systolic kick
    solver_step: float = 0.01  # RK4 step in oscillator time units
    settle_cycles: int = 5     # transient cycles discarded before extraction

    def __post_init__(self):
        if self.epsilon < 1.0:
            raise CoefficientError(
                f"epsilon must be >= 1 for a pulse-like cycle, got {self.epsilon}")
        if self.solver_step <= 0.0:
            raise CoefficientError("solver_step must be positive")
        if self.settle_cycles < 1:
            raise CoefficientError("settle_cycles must be >= 1")


@dataclass
class TemplateParams:
    """Parameters of the combined chest waveform."""

    A_h: float = 2.5e-4    # [m] heartbeat amplitude
    A_res: float = 3.0e-3  # [m] respiration amplitude
    T_h: float = 0.59      # [s] heartbeat period
    T_res: float = 1.25    # [s] respiration period
    t_off_h: float = 0.0   # [s] heartbeat time offset (circular)
    t_off_r: float = 0.0   # [s] respiration time offset (circular)
    y_off_h: float = 0.0   # [m] heartbeat value offset
    y_off_r: float = 0.0   # [m] respiration value offset
    c: float = 0.0         # [1/m] multiplicative coupling gain

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=float)

    @classmethod
    def from_vector(cls, v) -> "TemplateParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (len(PARAM_NAMES),):
            raise ValueError(f"expected {len(PARAM_NAMES)} parameters, got {v.shape}")
        return cls(**{n: float(x) for n, x in zip(PARAM_NAMES, v)})

    def validate(self):
        """Check the physiological constraint box, raising on violation."""
        box = {
            "A_h": A_H_BOUNDS, "A_res": A_RES_BOUNDS,
            "T_h": T_H_BOUNDS, "T_res": T_RES_BOUNDS,
        }
        for name, (lo, hi) in box.items():
            val = getattr(self, name)
            if not lo <= val <= hi:
                raise ValueError(
                    f"{name}={val} violates bound [{lo}, {hi}]")
        return self


# ---------------------------------------------------------------------------
# Unit pulses
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def _respiration_pulse_cached(coeffs: RespirationModelCoeffs, n_points: int):
    t = np.arange(n_points) / n_points
    v = coeffs.volume(t)
    lo, hi = v.min(), v.max()
    if hi - lo <= 0.0:
        raise CoefficientError("respiration volume is constant; cannot normalize")
    out = (v - lo) / (hi - lo)
    out.flags.writeable = False
    return out


def respiration_unit_pulse(coeffs: RespirationModelCoeffs | None = None,
                           n_points: int = 2048) -> np.ndarray:
    """One respiration cycle, duration normalized to 1, range [0, 1].

    The maximum is 1.0 exactly and sits inside the inspiratory segment; the
    waveform is continuous across the inspiratory/expiratory junction and
    across the period wrap (the start volume is the periodic solution).
    """
    if coeffs is None:
        coeffs = RespirationModelCoeffs()
    if n_points < 8:
        raise ValueError(f"n_points too small: {n_points}")
    return _respiration_pulse_cached(coeffs, n_points)


def _van_der_pol_rk4(eps: float, h: float, n_steps: int, u0=2.0, v0=0.0):
    """Fixed-step RK4 trace of the oscillator, returning u and v arrays."""
    u = np.empty(n_steps + 1)
    v = np.empty(n_steps + 1)
    u[0], v[0] = u0, v0
    uk, vk = u0, v0
    for k in range(n_steps):
        du1 = vk
        dv1 = eps * (1.0 - uk * uk) * vk - uk
        u2 = uk + 0.5 * h * du1
        v2 = vk + 0.5 * h * dv1
        du2 = v2
        dv2 = eps * (1.0 - u2 * u2) * v2 - u2
        u3 = uk + 0.5 * h * du2
        v3 = vk + 0.5 * h * dv2
        du3 = v3
        dv3 = eps * (1.0 - u3 * u3) * v3 - u3
        u4 = uk + h * du3
        v4 = vk + h * dv3
        du4 = v4
        dv4 = eps * (1.0 - u4 * u4) * v4 - u4
        uk = uk + (h / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4)
        vk = vk + (h / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
        u[k + 1], v[k + 1] = uk, vk
    return u, v


def van_der_pol_limit_cycle(coeffs: HeartModelCoeffs | None = None):
    """Settle the oscillator and return (period, amplitude, t_cycle, u_cycle).

    The cycle is cut between successive positive maxima of u (where the
    trajectory moves slowest), so its endpoints join smoothly when tiled.
    """
    if coeffs is None:
        coeffs = HeartModelCoeffs()
    eps, h = coeffs.epsilon, coeffs.solver_step
    # Crude period guess for the integration horizon (relaxation asymptote).
    t_guess = (3.0 - 2.0 * math.log(2.0)) * eps + 7.0143 * eps ** (-1.0 / 3.0)
    horizon = (coeffs.settle_cycles + 4) * max(t_guess, 2.0 * math.pi) * 1.5
    n_steps = int(math.ceil(horizon / h))
    u, v = _van_der_pol_rk4(eps, h, n_steps)

    # Positive maxima: v crosses zero downward while u > 0.
    sign_drop = (v[:-1] > 0.0) & (v[1:] <= 0.0) & (u[:-1] > 0.0)
    idx = np.nonzero(sign_drop)[0]
    if len(idx) < coeffs.settle_cycles + 2:
        raise SolverError(
            f"only {len(idx)} oscillation peaks within the integration horizon")
    # Linear interpolation of the v zero crossing gives the peak times.
    frac = v[idx] / (v[idx] - v[idx + 1])
    t_peaks = (idx + frac) * h
    periods = np.diff(t_peaks)
    period = float(periods[-1])
    prev = float(periods[-2])
    if abs(period - prev) > 1e-3 * period:
        raise SolverError(
            f"period has not settled: last two cycles {prev:.6f}, {period:.6f}")

    t = np.arange(len(u)) * h
    t0, t1 = t_peaks[-2], t_peaks[-1]
    inside = (t >= t0) & (t < t1)
    t_cycle = t[inside]
    u_cycle = u[inside]
    amplitude = float(np.max(np.abs(u_cycle)))
    return period, amplitude, t_cycle - t0, u_cycle


@functools.lru_cache(maxsize=32)
def _heartbeat_pulse_cached(coeffs: HeartModelCoeffs, n_points: int):
    period, amplitude, t_cycle, u_cycle = van_der_pol_limit_cycle(coeffs)
    # Dense grid over exactly one period, endpoints wrapped.
    t_wrap = np.concatenate((t_cycle, [period]))
    u_wrap = np.concatenate((u_cycle, [u_cycle[0]]))
    phase = np.arange(n_points) / n_points
    out = np.interp(phase * period, t_wrap, u_wrap) / amplitude
    out.flags.writeable = False
    return out


def heartbeat_unit_pulse(coeffs: HeartModelCoeffs | None = None,
                         n_points: int = 2048) -> np.ndarray:
    """One heartbeat cycle, duration normalized to 1, peak |amplitude| 1."""
    if coeffs is None:
        coeffs = HeartModelCoeffs()
    if n_points < 8:
        raise ValueError(f"n_points too small: {n_points}")
    return _heartbeat_pulse_cached(coeffs, n_points)


# ---------------------------------------------------------------------------
# Tiling and the combined waveform
# ---------------------------------------------------------------------------

_SPLINE_CACHE: dict[bytes, CubicSpline] = {}


def _periodic_spline(unit: np.ndarray) -> CubicSpline:
    key = unit.tobytes()
    spline = _SPLINE_CACHE.get(key)
    if spline is None:
        n = len(unit)
        grid = np.arange(n + 1) / n
        closed = np.concatenate((unit, unit[:1]))
        spline = CubicSpline(grid, closed, bc_type="periodic")
        if len(_SPLINE_CACHE) > 64:
            _SPLINE_CACHE.clear()
        _SPLINE_CACHE[key] = spline
    return spline


def tile_pulse(unit: np.ndarray, t, period: float, t_off: float = 0.0):
    """Periodic extension of a unit pulse evaluated at times t (seconds)."""
    if period <= 0.0:
        raise ValueError(f"period must be positive, got {period}")
    phase = np.mod((np.asarray(t, dtype=float) - t_off) / period, 1.0)
    return _periodic_spline(np.asarray(unit, dtype=float))(phase)


def render_components(params: TemplateParams, frame_rate: float,
                      duration: float,
                      resp_unit: np.ndarray | None = None,
                      heart_unit: np.ndarray | None = None):
    """Respiration and heartbeat components on a uniform time grid.

    Returns (t, y_res, y_h) with components in meters including value
    offsets; the combined waveform is y_res + y_h + c * y_res * y_h.
    """
    if frame_rate <= 0.0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    if duration <= 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    if resp_unit is None:
        resp_unit = respiration_unit_pulse()
    if heart_unit is None:
        heart_unit = heartbeat_unit_pulse()
    n = int(round(duration * frame_rate))
    t = np.arange(n) / frame_rate
    y_res = params.y_off_r + params.A_res * tile_pulse(
        resp_unit, t, params.T_res, params.t_off_r)
    y_h = params.y_off_h + params.A_h * tile_pulse(
        heart_unit, t, params.T_h, params.t_off_h)
    return t, y_res, y_h


def render_template(params: TemplateParams, frame_rate: float,
                    duration: float,
                    resp_unit: np.ndarray | None = None,
                    heart_unit: np.ndarray | None = None) -> np.ndarray:
    """Combined chest displacement waveform in meters."""
    _, y_res, y_h = render_components(
        params, frame_rate, duration, resp_unit, heart_unit)
    return y_res + y_h + params.c * y_res * y_h
