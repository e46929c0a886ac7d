"""Squeezing spectra and the effective Gaussian state inside a wave packet.

The spectra are shot-noise normalized (vacuum = 1); the Fock side of the
toolkit uses vacuum variance 1/2.  The factor 1/2 bridging the two
conventions is applied exactly once, inside :func:`wavepacket_variances`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridError, ModelViolationError
from .fock import GaussianModeState, effective_squeezing_loss
from .temporal import TemporalMode, mode_power_spectrum


@dataclass(frozen=True)
class SqueezingSpectrum:
    """Below-threshold source spectrum: pump power ``xi``, external loss, OPO half bandwidth (Hz)."""

    xi: float
    loss: float
    f_hwhm: float

    def __post_init__(self):
        if not 0.0 <= self.xi < 1.0:
            raise ValueError(f"normalized pump power must be in [0, 1), got {self.xi}")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError(f"loss must be in [0, 1], got {self.loss}")
        if self.f_hwhm <= 0:
            raise ValueError("OPO half bandwidth must be positive")


def squeezing_spectrum(s: SqueezingSpectrum, f, sign: int) -> np.ndarray | float:
    """Shot-noise-relative quadrature noise power at frequency f (Hz).

    S±(f) = 1 ± (1-L) 4ξ / ((1∓ξ)² + (f/f_HWHM)²); sign=+1 is the
    anti-squeezed quadrature, sign=-1 the squeezed one.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be nonnegative")
    denom = (1.0 - sign * s.xi) ** 2 + (f / s.f_hwhm) ** 2
    out = 1.0 + sign * (1.0 - s.loss) * 4.0 * s.xi / denom
    return float(out) if out.ndim == 0 else out


def pump_to_xi(power_mw: float, threshold_mw: float) -> float:
    """Below-threshold pump scaling ξ = sqrt(P / P_th)."""
    if threshold_mw <= 0:
        raise ValueError("threshold power must be positive")
    if power_mw < 0:
        raise ValueError("pump power must be nonnegative")
    if power_mw >= threshold_mw:
        raise ValueError(f"pump {power_mw} mW is at or above threshold {threshold_mw} mW")
    return float(np.sqrt(power_mw / threshold_mw))


def threshold_from_calibration(power_mw: float, xi: float) -> float:
    """Threshold power from one measured (pump power, ξ) pair."""
    if not 0 < xi < 1:
        raise ValueError("calibration xi must be in (0, 1)")
    return power_mw / xi**2


def _spectral_density_on_mode(mode: TemporalMode, s: SqueezingSpectrum, sign: int):
    omega, psd = mode_power_spectrum(mode)
    f = np.abs(omega) / (2.0 * np.pi)
    return omega, psd, squeezing_spectrum(s, f, sign)


def wavepacket_variances(mode: TemporalMode, s: SqueezingSpectrum) -> GaussianModeState:
    """Quadrature variances of the source field confined to a temporal mode.

    V∓ = (1/2) ∫ |F(ω)|² S∓(ω) dω/2π in vacuum-1/2 units, integrated by
    trapezoid on the mode's own FFT grid.  Rejects modes whose spectrum has
    not decayed at the grid's Nyquist edge (tail above 1e-4 of the peak),
    since the out-of-band part of the integral would be unaccounted for.
    """
    omega, psd, s_minus = _spectral_density_on_mode(mode, s, -1)
    boundary = max(psd[0], psd[-1])
    if boundary > 1e-4 * psd.max():
        raise GridError(
            f"mode spectrum at the frequency-grid edge is {boundary / psd.max():.1e} "
            "of its peak; refine the time grid before integrating"
        )
    s_plus = squeezing_spectrum(s, np.abs(omega) / (2 * np.pi), +1)
    v_minus = 0.5 * np.trapezoid(psd * s_minus, omega) / (2.0 * np.pi)
    v_plus = 0.5 * np.trapezoid(psd * s_plus, omega) / (2.0 * np.pi)
    return GaussianModeState(float(v_minus), float(v_plus))


def effective_params(g: GaussianModeState) -> tuple[float, float]:
    """Equivalent (squeezing parameter, loss fraction) of a mode-confined Gaussian state."""
    return effective_squeezing_loss(g.v_minus, g.v_plus)


def spectrum_to_csv(s: SqueezingSpectrum, path: str | Path, f_max: float | None = None, n: int = 500) -> None:
    """Three-column CSV (f, S-, S+) for plotting."""
    f_max = 5.0 * s.f_hwhm if f_max is None else f_max
    f = np.linspace(0.0, f_max, n)
    arr = np.column_stack([f, squeezing_spectrum(s, f, -1), squeezing_spectrum(s, f, +1)])
    np.savetxt(path, arr, delimiter=",", header="f_hz,s_minus,s_plus", comments="")
