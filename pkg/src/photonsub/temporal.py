"""Temporal modes of heralded wave packets and the real-time analysis filter.

The heralded mode is the time convolution of the source cavity's
double-sided exponential correlation with the one-sided responses of the
filtering cavities.  With three distinct filter rates the convolution has a
closed form: a four-exponential rise before the herald time and a single
exponential decay at the source rate after it.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.signal import fftconvolve, lfilter

from .errors import ConvergenceError, GridError

NORM_TOL = 1e-6


def rate_from_fwhm(fwhm_hz: float) -> float:
    """Angular HWHM rate gamma = 2 pi (FWHM/2) from a cavity's FWHM in Hz."""
    return 2.0 * np.pi * fwhm_hz / 2.0


def default_grid(n: int = 2048, dt: float = 1e-9, t0: float = 0.0) -> np.ndarray:
    """Uniform grid centered on the herald time (default 2048 samples at 1 ns)."""
    return t0 + (np.arange(n) - n // 2) * dt


@dataclass(frozen=True)
class TemporalMode:
    """Sampled real wave-packet amplitude, unit L2 norm on its grid."""

    t: np.ndarray
    values: np.ndarray
    t0: float
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape or t.ndim != 1:
            raise GridError("grid and values must be 1-D arrays of equal length")
        norm = np.sum(v**2) * self.dt
        if abs(norm - 1.0) > NORM_TOL:
            raise GridError(f"mode norm {norm!r} differs from 1")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.t, self.values]),
            delimiter=",",
            header="t,amplitude",
            comments="",
        )


def _normalized(
    t: np.ndarray, values: np.ndarray, t0: float, descriptor=None, fix_sign: bool = False
) -> TemporalMode:
    dt = t[1] - t[0]
    norm = np.sqrt(np.sum(values**2) * dt)
    if norm == 0:
        raise GridError("mode is identically zero on the grid")
    values = values / norm
    if fix_sign and values[np.argmax(np.abs(values))] < 0:
        values = -values
    return TemporalMode(t, values, t0, descriptor or {})


def _check_span(t: np.ndarray, t0: float, left: float, right: float) -> None:
    if t0 - t[0] < left or t[-1] - t0 < right:
        raise GridError(
            f"grid [{t[0]:.3e}, {t[-1]:.3e}] too short around t0={t0:.3e} "
            f"(need {left:.3e} before and {right:.3e} after)"
        )


def opo_mode(gamma: float, t0: float = 0.0, grid: np.ndarray | None = None) -> TemporalMode:
    """Double-sided exponential sqrt(gamma) e^{-gamma |t - t0|} of the source cavity."""
    if gamma <= 0:
        raise ValueError("rate must be positive")
    t = default_grid(t0=t0) if grid is None else np.asarray(grid, dtype=float)
    _check_span(t, t0, 5.0 / gamma, 5.0 / gamma)
    values = np.sqrt(gamma) * np.exp(-gamma * np.abs(t - t0))
    return _normalized(t, values, t0, {"kind": "opo", "gamma": gamma})


def filter_mode(gamma: float, t0: float = 0.0, grid: np.ndarray | None = None) -> TemporalMode:
    """One-sided rising exponential sqrt(2 gamma) e^{-gamma |t - t0|} Θ(t0 - t)."""
    if gamma <= 0:
        raise ValueError("rate must be positive")
    t = default_grid(t0=t0) if grid is None else np.asarray(grid, dtype=float)
    _check_span(t, t0, 5.0 / gamma, 0.0)
    values = np.sqrt(2.0 * gamma) * np.exp(-gamma * np.abs(t - t0)) * (t <= t0)
    return _normalized(t, values, t0, {"kind": "filter", "gamma": gamma})


def _composite_coefficients(gammas) -> tuple[np.ndarray, float]:
    """Coefficients c_1..c_4 and normalization N of the closed-form mode.

    c_1 = 2 g4 (g3 - g2) / (g4^2 - g1^2), c_2 and c_3 by cyclic permutation of
    the filter indices; c_4 collects the source-rate terms.  N normalizes the
    continuous-time expression.
    """
    g1, g2, g3, g4 = gammas
    c = np.empty(4)
    c[0] = 2 * g4 * (g3 - g2) / (g4**2 - g1**2)
    c[1] = 2 * g4 * (g1 - g3) / (g4**2 - g2**2)
    c[2] = 2 * g4 * (g2 - g1) / (g4**2 - g3**2)
    c[3] = (g1 - g2) / (g4 - g3) + (g2 - g3) / (g4 - g1) + (g3 - g1) / (g4 - g2)
    rates = np.asarray(gammas)
    quad = np.sum(np.outer(c, c) / np.add.outer(rates, rates))
    norm = (quad + c.sum() ** 2 / (2 * g4)) ** -0.5
    return c, float(norm)


def _composite_by_convolution(
    gammas, t0: float, t: np.ndarray, oversample: int = 8
) -> np.ndarray:
    """Numerical convolution fallback, valid for coincident rates."""
    dt = t[1] - t[0]
    fine_dt = dt / oversample
    half = (t[-1] - t[0]) / 2
    n_fine = 2 * int(round(half / fine_dt)) + 1  # odd so tf contains 0 exactly
    tf = np.linspace(-half, half, n_fine)
    g1, g2, g3, g4 = gammas
    out = np.exp(-g4 * np.abs(tf))
    for g in (g1, g2, g3):
        kernel = np.exp(g * np.minimum(tf, 0.0)) * (tf <= 0)
        out = fftconvolve(out, kernel, mode="same")
        out /= np.abs(out).max()
    return np.interp(t - t0, tf, out)


def composite_mode(
    gammas, t0: float = 0.0, grid: np.ndarray | None = None
) -> TemporalMode:
    """Heralded mode for three filtering cavities (rates g1..g3) and the source (g4).

    Evaluates the closed form (four-exponential rise, single-exponential tail)
    when all rates are pairwise distinct; otherwise the removable singularity
    is sidestepped by numerical convolution of the cavity responses.
    """
    gammas = tuple(float(g) for g in gammas)
    if len(gammas) != 4 or any(g <= 0 for g in gammas):
        raise ValueError("need four positive rates (three filters, then the source)")
    t = default_grid(t0=t0) if grid is None else np.asarray(grid, dtype=float)
    g4 = gammas[3]
    _check_span(t, t0, 5.0 / min(gammas), 5.0 / g4)

    rates = np.asarray(gammas)
    dists = np.abs(np.subtract.outer(rates, rates)) / rates
    np.fill_diagonal(dists, np.inf)
    if dists.min() < 1e-6:
        values = _composite_by_convolution(gammas, t0, t)
        return _normalized(t, values, t0, {"kind": "composite", "gammas": gammas, "method": "convolution"}, fix_sign=True)

    c, norm = _composite_coefficients(gammas)
    u = t - t0
    rise = np.sum(c[:, None] * np.exp(-rates[:, None] * np.abs(u[None, :])), axis=0)
    tail = c.sum() * np.exp(-g4 * np.abs(u))
    values = norm * np.where(u <= 0, rise, tail)
    descriptor = {
        "kind": "composite",
        "gammas": gammas,
        "coefficients": tuple(c),
        "normalization": norm,
        "method": "analytic",
    }
    return _normalized(t, values, t0, descriptor, fix_sign=True)


def inner_product(f: TemporalMode, g: TemporalMode) -> float:
    """Discrete overlap integral of two modes on a common grid."""
    if f.t.shape != g.t.shape or not np.allclose(f.t, g.t, rtol=0, atol=1e-15 + f.dt * 1e-9):
        raise GridError("modes live on different grids")
    return float(np.sum(f.values * g.values) * f.dt)


def mode_power_spectrum(f: TemporalMode) -> tuple[np.ndarray, np.ndarray]:
    """|F(omega)|^2 on the FFT grid, normalized so ∫ |F|^2 dω / 2π = 1.

    Warns about spectral leakage when the mode has not decayed at the grid
    boundary.
    """
    boundary = max(abs(f.values[0]), abs(f.values[-1]))
    if boundary > 1e-3 * np.abs(f.values).max():
        warnings.warn("mode does not vanish at the grid boundary; spectrum may leak", RuntimeWarning)
    n = f.t.size
    spectrum = np.fft.fftshift(np.fft.fft(f.values)) * f.dt
    omega = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, f.dt))
    return omega, np.abs(spectrum) ** 2


# ---------------------------------------------------------------------------
# real-time low-pass filter


@dataclass(frozen=True)
class FilterCoefficients:
    """Cascade of three first-order low-pass sections.

    ``tau`` are the stage time constants; ``gain`` scales the unit-DC-gain
    cascade response so the time-reversed impulse response has unit L2 norm
    on the design grid (making the filtered output at the herald time a
    quadrature estimate).
    """

    tau: tuple[float, float, float]
    gain: float = 1.0

    def __post_init__(self):
        if any(tt <= 0 for tt in self.tau):
            raise ValueError("stage time constants must be positive")

    def to_json_dict(self) -> dict:
        return {"tau": list(self.tau), "gain": self.gain}

    @classmethod
    def from_json_dict(cls, d: dict) -> "FilterCoefficients":
        return cls(tuple(d["tau"]), d["gain"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict()))


def impulse_response(coeffs: FilterCoefficients, t: np.ndarray) -> np.ndarray:
    """Continuous-time impulse response of the cascade, gain included.

    Partial fractions of Π 1/(1 + s τ_i); near-coincident time constants are
    nudged apart (the response is continuous in τ, so the perturbation error
    is of the same 1e-9 relative order as the nudge).
    """
    taus = np.asarray(coeffs.tau, dtype=float).copy()
    for i in range(1, 3):
        for j in range(i):
            if abs(taus[i] - taus[j]) < 1e-3 * taus[j]:
                taus[i] = taus[j] * (1.0 + 1e-3 * (i - j))
    t = np.asarray(t, dtype=float)
    h = np.zeros_like(t)
    for i in range(3):
        residue = 1.0
        for j in range(3):
            if j != i:
                residue *= taus[i] / (taus[i] - taus[j])
        h = h + (residue / taus[i]) * np.exp(-np.clip(t, 0.0, None) / taus[i])
    return coeffs.gain * h * (t >= 0)


def reversed_response_mode(
    coeffs: FilterCoefficients, grid: np.ndarray, t0: float
) -> TemporalMode:
    """Time-reversed impulse response anchored at the herald time, unit norm.

    This is the temporal mode the analog filter effectively projects onto
    when its output is sampled at t0.
    """
    grid = np.asarray(grid, dtype=float)
    values = impulse_response(coeffs, t0 - grid)
    return _normalized(grid, values, t0, {"kind": "lpf_reversed", "tau": coeffs.tau})


def _causal_tail_fraction(target: TemporalMode) -> float:
    after = target.t > target.t0
    return float(np.sum(target.values[after] ** 2) * target.dt)


def design_lpf(
    target: TemporalMode,
    n_restarts: int = 3,
    seed: int = 0,
    min_overlap: float = 0.95,
) -> tuple[FilterCoefficients, float]:
    """Fit the three stage time constants to a causal-rising target mode.

    Maximizes the overlap between the cascade's time-reversed impulse
    response and the target by a derivative-free simplex search over log τ,
    restarted from jittered initial guesses.  Returns the coefficients (gain
    set for a unit-norm analysis mode) and the achieved overlap.
    """
    tail = _causal_tail_fraction(target)
    if tail > 0.02:
        raise GridError(
            f"target is not causal-rising: {tail:.1%} of its weight lies after t0"
        )
    lookback = float(np.sum((target.t0 - target.t) * target.values**2) * target.dt)
    lookback = max(lookback, 3.0 * target.dt)
    u = target.t0 - target.t

    def overlap_of(log_tau: np.ndarray) -> float:
        h = _unit_cascade(np.exp(log_tau), u)
        norm = np.sqrt(np.sum(h**2) * target.dt)
        if norm == 0 or not np.isfinite(norm):
            return 0.0
        return float(np.sum(h * target.values) * target.dt / norm)

    rng = np.random.default_rng(seed)
    best = (-np.inf, None)
    x0_base = np.log([lookback, lookback / 4.0, lookback / 16.0])
    for restart in range(n_restarts):
        x0 = x0_base + (rng.normal(scale=0.4, size=3) if restart else 0.0)
        res = minimize(lambda x: -overlap_of(x), x0, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000})
        if -res.fun > best[0]:
            best = (-res.fun, np.exp(res.x))
    achieved, taus = best
    if achieved < min_overlap or taus is None:
        raise ConvergenceError(
            f"filter design stagnated at overlap {achieved:.4f} < {min_overlap}"
        )
    h = _unit_cascade(taus, u)
    gain = 1.0 / np.sqrt(np.sum(h**2) * target.dt)
    coeffs = FilterCoefficients(tuple(float(tt) for tt in sorted(taus, reverse=True)), float(gain))
    return coeffs, float(achieved)


def _unit_cascade(taus, u: np.ndarray) -> np.ndarray:
    """Reversed unit-DC cascade response h(t0 - t) evaluated at look-back times u."""
    return impulse_response(FilterCoefficients(tuple(taus), 1.0), u)


def lpf_apply(coeffs: FilterCoefficients, trace: np.ndarray, dt: float) -> np.ndarray:
    """Causal discrete-time filtering of a sampled signal.

    Each stage uses the exact exponential (zero-order-hold) discretization
    y[n] = a y[n-1] + (1-a) x[n] with a = exp(-dt/tau).  Requires
    dt <= min(tau)/10 so the discrete response tracks the continuous one.
    """
    if dt > min(coeffs.tau) / 10.0:
        raise GridError(
            f"sampling interval {dt:.2e} undersamples the fastest stage "
            f"(tau_min = {min(coeffs.tau):.2e})"
        )
    y = np.asarray(trace, dtype=float)
    for tau in coeffs.tau:
        a = np.exp(-dt / tau)
        y = _first_order(y, a)
    return coeffs.gain * y


def _first_order(x: np.ndarray, a: float) -> np.ndarray:
    return lfilter([1.0 - a], [1.0, -a], x)
