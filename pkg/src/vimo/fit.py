"""Template matching: initialization and bound-constrained least squares.

The chest waveform is matched against the 9-parameter template (two
periods, two amplitudes, two time offsets, two value offsets, coupling
gain) by minimizing the sum of squared errors inside a hard constraint
box.  Respiration parameters are initialized from the autocorrelation and
a circular alignment scan, heartbeat parameters from a coarse grid over
period and offset, and all nine are then refined together by a
trust-region Gauss-Newton descent with finite-difference Jacobians.

The optimizer is generic (any residual function over a box) so it can be
exercised on standard test problems.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .series import DisplacementSeries
from .templates import (A_H_BOUNDS, A_RES_BOUNDS, PARAM_NAMES, T_H_BOUNDS,
                        T_RES_BOUNDS, TemplateParams, _periodic_spline,
                        heartbeat_unit_pulse, respiration_unit_pulse)


@dataclass(frozen=True)
class ParamBounds:
    """Box constraints in PARAM_NAMES order."""

    lower: tuple = (A_H_BOUNDS[0], A_RES_BOUNDS[0], T_H_BOUNDS[0],
                    T_RES_BOUNDS[0], 0.0, 0.0, -1.0e-2, -1.0e-2, -1.0e4)
    upper: tuple = (A_H_BOUNDS[1], A_RES_BOUNDS[1], T_H_BOUNDS[1],
                    T_RES_BOUNDS[1], T_H_BOUNDS[1], T_RES_BOUNDS[1],
                    1.0e-2, 1.0e-2, 1.0e4)

    def __post_init__(self):
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        if lo.shape != hi.shape or len(lo) != len(PARAM_NAMES):
            raise ValueError("bounds must cover all template parameters")
        if not np.all(hi > lo):
            raise ValueError("upper bounds must exceed lower bounds")

    def arrays(self):
        return (np.asarray(self.lower, dtype=float),
                np.asarray(self.upper, dtype=float))

    def clip(self, v: np.ndarray) -> np.ndarray:
        lo, hi = self.arrays()
        return np.clip(v, lo, hi)


@dataclass
class FitConfig:
    bounds: ParamBounds = field(default_factory=ParamBounds)
    coarse_points: int = 500      # heartbeat grid size (period x offset)
    sse_tol: float = 1.0e-8       # stop when an accepted step improves less
    max_iters: int = 200          # outer trust-region iterations
    fd_rel_step: float = 1.0e-6   # Jacobian step, fraction of bound span
    initial_radius: float = 0.1   # trust radius, fraction of bound span
    ac_peak_min: float = 0.2      # autocorrelation peak acceptance level
    multistart: int = 4           # descents from period-diverse grid starts
    multistart_sep: float = 0.08  # [s] min respiration period gap to add a start
    heart_sep: float = 0.03       # min relative period gap between heart starts
    resp_unit: np.ndarray | None = None
    heart_unit: np.ndarray | None = None

    def units(self):
        resp = self.resp_unit if self.resp_unit is not None else respiration_unit_pulse()
        heart = self.heart_unit if self.heart_unit is not None else heartbeat_unit_pulse()
        return np.asarray(resp, dtype=float), np.asarray(heart, dtype=float)


@dataclass
class FitResult:
    params: TemplateParams
    sse: float
    converged: bool
    n_iters: int
    sse_history: list[float]
    resp_wave: DisplacementSeries
    heart_wave: DisplacementSeries

    @property
    def resp_rate_bpm(self) -> float:
        return 60.0 / self.params.T_res

    @property
    def heart_rate_bpm(self) -> float:
        return 60.0 / self.params.T_h


# ---------------------------------------------------------------------------
# Template objective
# ---------------------------------------------------------------------------

class TemplateObjective:
    """Residuals of the 9-parameter template against a measured waveform."""

    def __init__(self, x: DisplacementSeries, config: FitConfig):
        self.target = np.asarray(x.values, dtype=float)
        self.t = x.times
        resp_unit, heart_unit = config.units()
        self._resp = _periodic_spline(resp_unit)
        self._heart = _periodic_spline(heart_unit)

    def components(self, v: np.ndarray):
        # v follows PARAM_NAMES: A_h, A_res, T_h, T_res, t_off_h, t_off_r,
        # y_off_h, y_off_r, c
        y_res = v[7] + v[1] * self._resp(np.mod((self.t - v[5]) / v[3], 1.0))
        y_h = v[6] + v[0] * self._heart(np.mod((self.t - v[4]) / v[2], 1.0))
        return y_res, y_h

    def model(self, v: np.ndarray) -> np.ndarray:
        y_res, y_h = self.components(v)
        return y_res + y_h + v[8] * y_res * y_h

    def residuals(self, v: np.ndarray) -> np.ndarray:
        return self.model(v) - self.target

    def sse(self, v: np.ndarray) -> float:
        r = self.residuals(v)
        return float(r @ r)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def _spectral_resp_period(v: np.ndarray, frame_rate: float) -> float | None:
    """Period of the strongest respiration-band spectral line, or None.

    v must be mean-removed.  The peak frequency is parabolically refined
    on the log-power of the neighboring DFT bins.
    """
    t_lo, t_hi = T_RES_BOUNDS
    spec = np.abs(np.fft.rfft(v)) ** 2
    freqs = np.fft.rfftfreq(len(v), 1.0 / frame_rate)
    band = np.nonzero((freqs >= 1.0 / t_hi) & (freqs <= 1.0 / t_lo))[0]
    if band.size == 0 or spec[band].max() <= 0.0:
        return None
    k = int(band[np.argmax(spec[band])])
    f_peak = freqs[k]
    if 1 <= k < len(spec) - 1 and spec[k - 1] > 0 and spec[k + 1] > 0:
        y0, y1, y2 = np.log(spec[k - 1:k + 2])
        curv = y0 - 2.0 * y1 + y2
        if curv < 0:
            shift = float(np.clip(0.5 * (y0 - y2) / curv, -0.5, 0.5))
            f_peak = (k + shift) * frame_rate / len(v)
    return 1.0 / float(f_peak) if f_peak > 0 else None


def _align_resp_offset(x: DisplacementSeries, t_res: float,
                       config: FitConfig) -> float:
    """Circular offset maximizing correlation with a unit resp tiling."""
    resp_unit, _ = config.units()
    spline = _periodic_spline(resp_unit)
    v = x.values - x.values.mean()
    t = x.times
    n_off = max(8, int(round(t_res * x.frame_rate)))
    offsets = np.arange(n_off) * (t_res / n_off)
    best_off, best_score = 0.0, -np.inf
    for off in offsets:
        u = spline(np.mod((t - off) / t_res, 1.0))
        u = u - u.mean()
        score = float(u @ v)
        if score > best_score:
            best_score, best_off = score, float(off)
    return best_off


def init_resp(x: DisplacementSeries, config: FitConfig | None = None):
    """Respiration period and circular offset estimates.

    The period comes from the first autocorrelation peak inside the allowed
    period range (parabolically refined); if no peak clears ac_peak_min the
    spectral argmax of the respiration band substitutes, with a warning.
    The offset maximizes circular correlation between the waveform and a
    unit respiration tiling at the estimated period.
    """
    if config is None:
        config = FitConfig()
    fr = x.frame_rate
    v = x.values - x.values.mean()
    n = len(v)
    t_lo, t_hi = T_RES_BOUNDS

    t_res = None
    denom = float(v @ v)
    if denom > 0.0:
        ac = np.correlate(v, v, mode="full")[n - 1:] / denom
        k_lo = max(1, int(math.ceil(t_lo * fr)))
        k_hi = min(int(math.floor(t_hi * fr)), n - 2)
        for k in range(k_lo, k_hi + 1):
            if ac[k] >= config.ac_peak_min and ac[k] > ac[k - 1] and ac[k] >= ac[k + 1]:
                # Parabolic refinement around the discrete peak.
                y0, y1, y2 = ac[k - 1], ac[k], ac[k + 1]
                curv = y0 - 2.0 * y1 + y2
                shift = 0.5 * (y0 - y2) / curv if curv < 0 else 0.0
                t_res = (k + float(np.clip(shift, -0.5, 0.5))) / fr
                break
    if t_res is None:
        warnings.warn("no periodicity peak found; falling back to the "
                      "respiration-band spectral maximum", stacklevel=2)
        t_res = _spectral_resp_period(v, fr)
        if t_res is None:
            t_res = 0.5 * (t_lo + t_hi)
    t_res = float(np.clip(t_res, t_lo, t_hi))
    if t_res > x.duration / 2.0:
        warnings.warn(f"window covers under two periods of T_res={t_res:.2f} s",
                      stacklevel=2)

    return t_res, _align_resp_offset(x, t_res, config)


def _heart_band_amplitude(x: DisplacementSeries):
    """Rough heartbeat amplitude from the spectrum over 0.8 to 2 Hz.

    Twice the largest mean-removed Fourier magnitude in the band, divided
    by the sample count, approximates the peak swing of a near-sinusoidal
    component.  Returns None when the band is empty or silent.
    """
    v = np.asarray(x.values, dtype=float)
    n = v.size
    spec = np.abs(np.fft.rfft(v - v.mean()))
    freqs = np.fft.rfftfreq(n, d=1.0 / x.frame_rate)
    band = (freqs > 0.8) & (freqs <= 2.0)
    if not band.any():
        return None
    peak = float(spec[band].max())
    if peak <= 0.0:
        return None
    return 2.0 * peak / n


def _residual_heart_period(x: DisplacementSeries, objective, v: np.ndarray):
    """Period of the strongest unexplained heart-band line, if prominent.

    A descent that settled on the wrong beat period leaves the true line
    standing in the fit residual, and its period makes a better restart
    than any coarse grid point.  Returns None when the band is empty or
    the peak does not stand clear of the band floor (an argmax over noise
    would just buy a wasted descent).
    """
    r = np.asarray(objective.residuals(v), dtype=float)
    n = r.size
    n_fft = 8 * n  # basin gaps are a few percent; the bare grid is too coarse
    spec = np.abs(np.fft.rfft(r - r.mean(), n_fft))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / x.frame_rate)
    band = (freqs > 1.0 / T_H_BOUNDS[1]) & (freqs <= 1.0 / T_H_BOUNDS[0])
    if not band.any():
        return None
    in_band = spec[band]
    peak = float(in_band.max())
    floor = float(np.median(in_band))
    if peak <= 0.0 or peak < 4.0 * floor:
        return None
    return float(1.0 / freqs[band][int(np.argmax(in_band))])


def _heart_grid(x: DisplacementSeries, resp_params: TemplateParams,
                config: FitConfig, probe_amp: float | None = None):
    """SSE over the (period, offset) grid with respiration held fixed.

    The heartbeat amplitude is probed at mid-bound unless probe_amp says
    otherwise.  Returns (entries, flat) where entries are (sse, T_h,
    t_off_h) in scan order and flat marks a nearly level surface (weak
    heartbeat).
    """
    objective = TemplateObjective(x, config)
    t_lo, t_hi = T_H_BOUNDS
    n_t = max(2, int(round(math.sqrt(config.coarse_points * 25.0 / 20.0))))
    n_off = max(2, config.coarse_points // n_t)

    if probe_amp is None:
        probe_amp = 0.5 * (A_H_BOUNDS[0] + A_H_BOUNDS[1])
    probe = replace(resp_params, A_h=float(np.clip(probe_amp, *A_H_BOUNDS)),
                    y_off_h=0.0, c=0.0)
    base = probe.to_vector()
    i_th = PARAM_NAMES.index("T_h")
    i_off = PARAM_NAMES.index("t_off_h")

    entries = []
    for t_h in np.linspace(t_lo, t_hi, n_t):
        for frac in np.arange(n_off) / n_off:
            v = base.copy()
            v[i_th] = t_h
            v[i_off] = frac * t_h
            entries.append((objective.sse(v), float(t_h), float(frac * t_h)))
    sses = np.array([e[0] for e in entries])
    flat = sses.max() - sses.min() < 0.05 * max(sses.min(), 1e-30)
    return entries, flat


def heart_grid_candidates(x: DisplacementSeries, resp_params: TemplateParams,
                          config: FitConfig | None = None,
                          k: int | None = None):
    """Period-diverse (T_h, t_off_h) starting points, best SSE first.

    Scans the grid at the mid-bound probe amplitude and, when the spectrum
    suggests a very different heartbeat strength, once more at that
    estimate: a weak beat scores almost identically through an oversized
    probe, so the second pass restores contrast.  Candidates are pooled
    minima kept only if their period differs from every already chosen one
    by the relative margin heart_sep, so restarts probe genuinely
    different beat-rate basins instead of one flat valley.
    """
    if config is None:
        config = FitConfig()
    if k is None:
        k = max(1, config.multistart)
    entries, _ = _heart_grid(x, resp_params, config)
    mid_amp = 0.5 * (A_H_BOUNDS[0] + A_H_BOUNDS[1])
    band_amp = _heart_band_amplitude(x)
    if band_amp is not None and not (0.5 < band_amp / mid_amp < 2.0):
        extra, _ = _heart_grid(x, resp_params, config, probe_amp=band_amp)
        entries = entries + extra
    ranked = sorted(entries, key=lambda e: (e[0], e[1], e[2]))
    chosen = []
    for _, t_h, t_off in ranked:
        if all(abs(t_h - c[0]) >= config.heart_sep * c[0] for c in chosen):
            chosen.append((t_h, t_off))
            if len(chosen) >= k:
                break
    return chosen


def init_heart(x: DisplacementSeries, resp_params: TemplateParams,
               config: FitConfig | None = None):
    """Heartbeat period and offset from a coarse grid search.

    Holds the respiration parameters fixed, probes the heartbeat amplitude
    at mid-bound, and scans roughly coarse_points (period, offset) pairs,
    taking the SSE minimum (smallest period, then offset, on ties).  A
    near-flat SSE surface is flagged as a weak heartbeat.
    """
    if config is None:
        config = FitConfig()
    entries, flat = _heart_grid(x, resp_params, config)
    if flat:
        warnings.warn("heartbeat grid SSE is nearly flat; weak or absent "
                      "heartbeat", stacklevel=2)
    best = min(entries, key=lambda e: (e[0], e[1], e[2]))
    return best[1], best[2]


def _resp_base_params(x: DisplacementSeries, config: FitConfig) -> TemplateParams:
    """Respiration-side starting point; heartbeat fields still at probes."""
    t_res, t_off_r = init_resp(x, config)
    ptp = float(np.ptp(x.values))
    return TemplateParams(
        A_h=0.5 * (A_H_BOUNDS[0] + A_H_BOUNDS[1]),
        A_res=float(np.clip(ptp, *A_RES_BOUNDS)),
        T_h=0.5 * (T_H_BOUNDS[0] + T_H_BOUNDS[1]),
        T_res=t_res,
        t_off_h=0.0,
        t_off_r=t_off_r,
        y_off_h=0.0,
        y_off_r=float(np.clip(x.values.mean(), -1e-2, 1e-2)),
        c=0.0,
    )


def initial_params(x: DisplacementSeries,
                   config: FitConfig | None = None) -> TemplateParams:
    """Full starting point for the descent."""
    if config is None:
        config = FitConfig()
    p = _resp_base_params(x, config)
    t_h, t_off_h = init_heart(x, p, config)
    return replace(p, T_h=t_h, t_off_h=t_off_h)


# ---------------------------------------------------------------------------
# Bound-constrained trust-region Gauss-Newton
# ---------------------------------------------------------------------------

@dataclass
class TrResult:
    v: np.ndarray
    sse: float
    converged: bool
    n_iters: int
    sse_history: list[float]


def _tr_step(h_mat: np.ndarray, g: np.ndarray, radius: float) -> np.ndarray:
    """Step minimizing the quadratic model within ||s|| <= radius."""
    dim = len(g)
    ridge = 1e-14 * max(float(np.trace(h_mat)), 1.0)

    def solve(mu):
        try:
            return np.linalg.solve(h_mat + (mu + ridge) * np.eye(dim), -g)
        except np.linalg.LinAlgError:
            return None

    s = solve(0.0)
    if s is not None and np.linalg.norm(s) <= radius:
        return s
    # Levenberg path: ||s(mu)|| decreases monotonically in mu.
    mu_hi = 1.0
    for _ in range(200):
        s = solve(mu_hi)
        if s is not None and np.linalg.norm(s) <= radius:
            break
        mu_hi *= 10.0
    else:
        gn = np.linalg.norm(g)
        return -g * (radius / gn) if gn > 0 else np.zeros(dim)
    mu_lo = 0.0
    for _ in range(60):
        mid = 0.5 * (mu_lo + mu_hi)
        s_mid = solve(mid)
        if s_mid is None or np.linalg.norm(s_mid) > radius:
            mu_lo = mid
        else:
            mu_hi, s = mid, s_mid
    return s


def tr_least_squares(residual_fn, v0, lower, upper, *, sse_tol: float = 1e-8,
                     max_iters: int = 200, fd_rel_step: float = 1e-6,
                     initial_radius: float = 0.1) -> TrResult:
    """Minimize ||residual_fn(v)||^2 over the box [lower, upper].

    Coordinates are scaled to the unit box; the Jacobian is built by
    forward differences; steps solve a trust-region subproblem on the
    Gauss-Newton model and are projected back into the box.  Only strictly
    decreasing steps are accepted, so the SSE history is monotone and every
    iterate stays feasible.  Stops once an accepted step improves the SSE
    by less than sse_tol (converged) or after max_iters Jacobian builds
    (not converged); a stall with a collapsed radius also counts as
    converged since no descent direction remains.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or not np.all(hi > lo):
        raise ValueError("bounds must satisfy upper > lower elementwise")
    span = hi - lo
    z = np.clip((np.asarray(v0, dtype=float) - lo) / span, 0.0, 1.0)
    dim = len(z)

    def res(zv):
        return np.asarray(residual_fn(lo + zv * span), dtype=float)

    r = res(z)
    f = float(r @ r)
    history = [f]
    radius = initial_radius
    converged = False
    n_iters = 0

    for _ in range(max_iters):
        n_iters += 1
        jac = np.empty((len(r), dim))
        for i in range(dim):
            zp = z.copy()
            step = fd_rel_step if z[i] + fd_rel_step <= 1.0 else -fd_rel_step
            zp[i] += step
            jac[:, i] = (res(zp) - r) / step
        g = 2.0 * (jac.T @ r)
        h_mat = 2.0 * (jac.T @ jac)
        if float(np.max(np.abs(g))) == 0.0:
            converged = True
            break

        improvement = None
        for _ in range(40):
            s = _tr_step(h_mat, g, radius)
            z_new = np.clip(z + s, 0.0, 1.0)
            sp = z_new - z
            pred = -(g @ sp + 0.5 * sp @ h_mat @ sp)
            if pred <= 0.0 or not np.any(sp):
                radius *= 0.25
                if radius < 1e-13:
                    break
                continue
            r_new = res(z_new)
            f_new = float(r_new @ r_new)
            if f_new < f:
                rho = (f - f_new) / pred
                improvement = f - f_new
                z, r, f = z_new, r_new, f_new
                history.append(f)
                if rho > 0.75 and np.linalg.norm(sp) >= 0.8 * radius:
                    radius = min(2.0 * radius, 2.0)
                elif rho < 0.25:
                    radius = max(0.5 * radius, 1e-13)
                break
            radius *= 0.25
            if radius < 1e-13:
                break
        if improvement is None:
            converged = True  # no strictly decreasing step exists anymore
            break
        if improvement < sse_tol:
            converged = True
            break

    return TrResult(lo + z * span, f, converged, n_iters, history)


def fd_gradient(sse_fn, v, *, rel_step: float = 1e-6, span=None,
                scheme: str = "central") -> np.ndarray:
    """Finite-difference gradient of a scalar function.

    Steps are rel_step times the per-coordinate span (|v|+1 when no span is
    given).  scheme is 'forward' or 'central'.
    """
    v = np.asarray(v, dtype=float)
    span = np.abs(v) + 1.0 if span is None else np.asarray(span, dtype=float)
    g = np.zeros_like(v)
    f0 = sse_fn(v) if scheme == "forward" else None
    for i in range(len(v)):
        h = rel_step * span[i]
        vp = v.copy()
        vp[i] += h
        if scheme == "forward":
            g[i] = (sse_fn(vp) - f0) / h
        elif scheme == "central":
            vm = v.copy()
            vm[i] -= h
            g[i] = (sse_fn(vp) - sse_fn(vm)) / (2.0 * h)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
    return g


# ---------------------------------------------------------------------------
# End-to-end fit
# ---------------------------------------------------------------------------

def fit_templates(x: DisplacementSeries,
                  init: TemplateParams | None = None,
                  config: FitConfig | None = None) -> FitResult:
    """Fit the 9-parameter template to a displacement series.

    With an explicit starting point a single descent runs from it.
    Otherwise the initialization chain provides period-diverse heartbeat
    starting points and the best descent wins; strong period coupling can
    dig a deep false valley at the respiration/heartbeat beat frequency, so
    one start is not enough.  A final polish pass then checks the residual
    spectrum: a prominent unexplained heart-band line at a clearly
    different period (a respiration harmonic can out-shout a faint
    heartbeat on the coarse grid) earns one more descent, and SSE
    arbitrates.  Non-convergence (iteration budget exhausted) still
    returns the best parameters found, flagged through FitResult.converged.
    """
    if config is None:
        config = FitConfig()
    objective = TemplateObjective(x, config)
    lo, hi = config.bounds.arrays()

    if init is not None:
        starts = [init]
    else:
        base = _resp_base_params(x, config)
        bases = [base]
        # The autocorrelation lag can land on a blend of the two periods
        # when the coupling term is strong, or on slow interference.  The
        # respiration-band spectral line is an independent opinion; when
        # the two disagree, both basins get descents and SSE arbitrates.
        t_alt = _spectral_resp_period(x.values - x.values.mean(), x.frame_rate)
        if t_alt is not None:
            t_alt = float(np.clip(t_alt, *T_RES_BOUNDS))
            if abs(t_alt - base.T_res) >= config.multistart_sep:
                bases.append(replace(
                    base, T_res=t_alt,
                    t_off_r=_align_resp_offset(x, t_alt, config)))
        starts = []
        for b in bases:
            cands = heart_grid_candidates(x, b, config)
            starts.extend(replace(b, T_h=t_h, t_off_h=t_off)
                          for t_h, t_off in cands)
            if not cands:
                starts.append(b)

    best_tr = None
    for start in starts:
        v0 = config.bounds.clip(start.to_vector())
        tr = tr_least_squares(objective.residuals, v0, lo, hi,
                              sse_tol=config.sse_tol,
                              max_iters=config.max_iters,
                              fd_rel_step=config.fd_rel_step,
                              initial_radius=config.initial_radius)
        if best_tr is None or tr.sse < best_tr.sse:
            best_tr = tr

    if init is None:
        fitted = TemplateParams.from_vector(best_tr.v)
        t_alt = _residual_heart_period(x, objective, best_tr.v)
        if t_alt is not None:
            t_alt = float(np.clip(t_alt, *T_H_BOUNDS))
        if (t_alt is not None
                and abs(t_alt - fitted.T_h) >= config.heart_sep * fitted.T_h):
            best_off, best_sse = 0.0, math.inf
            for frac in np.arange(20) / 20.0:
                trial = replace(fitted, T_h=t_alt, t_off_h=frac * t_alt)
                s = objective.sse(trial.to_vector())
                if s < best_sse:
                    best_sse, best_off = s, frac * t_alt
            v0 = config.bounds.clip(
                replace(fitted, T_h=t_alt, t_off_h=best_off).to_vector())
            tr = tr_least_squares(objective.residuals, v0, lo, hi,
                                  sse_tol=config.sse_tol,
                                  max_iters=config.max_iters,
                                  fd_rel_step=config.fd_rel_step,
                                  initial_radius=config.initial_radius)
            if tr.sse < best_tr.sse:
                best_tr = tr

    params = TemplateParams.from_vector(best_tr.v)
    y_res, y_h = objective.components(best_tr.v)
    return FitResult(
        params=params, sse=best_tr.sse, converged=best_tr.converged,
        n_iters=best_tr.n_iters, sse_history=best_tr.sse_history,
        resp_wave=DisplacementSeries(y_res, x.frame_rate),
        heart_wave=DisplacementSeries(y_h, x.frame_rate),
    )


def extract_rates(result: FitResult, bounds: ParamBounds | None = None):
    """Respiration and heart rates in bpm plus names of at-bound parameters."""
    if bounds is None:
        bounds = ParamBounds()
    lo, hi = bounds.arrays()
    v = result.params.to_vector()
    span = hi - lo
    at_bounds = tuple(
        name for name, val, l, h, s in zip(PARAM_NAMES, v, lo, hi, span)
        if val - l < 1e-9 * s or h - val < 1e-9 * s)
    return result.resp_rate_bpm, result.heart_rate_bpm, at_bounds
