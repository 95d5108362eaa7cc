"""Small-scale fading and resource-activity masks."""

from __future__ import annotations

import numpy as np
from scipy.special import j0

SPEED_OF_LIGHT = 299_792_458.0


def doppler_hz(speed_kmh: float, carrier_hz: float) -> float:
    return speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT


def jakes_correlation(speed_kmh: float, carrier_hz: float, lag_s: float) -> float:
    """Clarke/Jakes autocorrelation ``J0(2 pi f_d tau)`` of a Rayleigh tap."""
    return float(j0(2.0 * np.pi * doppler_hz(speed_kmh, carrier_hz) * lag_s))


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def init_fading(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circular Gaussian taps."""
    return _cn(rng, shape)


def step_fading(rng: np.random.Generator, h: np.ndarray, rho: float) -> np.ndarray:
    """First-order Gauss-Markov update whose lag-one correlation is ``rho``.

    ``rho = 1`` (no motion) leaves the taps unchanged and draws nothing.
    """
    if rho >= 1.0:
        return h
    return rho * h + np.sqrt(1.0 - rho * rho) * _cn(rng, h.shape)


def apply_utilization(rng: np.random.Generator, n_tp: int, n_rb: int, subband_width: int,
                      mode: str, utilization: float, layers: int = 6) -> np.ndarray:
    """Per-TP, per-RB transmit power fraction for one TTI.

    OFDMA: each RB is on at full power with probability ``utilization``.
    SCMA modes: each subband carries ``Binomial(layers, utilization)`` active
    layers and every RB of it transmits the active-layer fraction of full power.
    """
    if not 0.0 < utilization <= 1.0:
        raise ValueError("utilization must lie in (0, 1]")
    if mode == "OFDMA":
        return (rng.random((n_tp, n_rb)) < utilization).astype(float)
    n_sb = n_rb // subband_width
    active = rng.binomial(layers, utilization, (n_tp, n_sb))
    return np.repeat(active / layers, subband_width, axis=1)


def rb_interference(gain: np.ndarray, serving: np.ndarray, power_fraction: np.ndarray,
                    power_rb_w: float) -> np.ndarray:
    """Other-cell interference power ``(U, RB)`` in watts."""
    total = gain @ power_fraction
    own = gain[np.arange(gain.shape[0]), serving][:, None] * power_fraction[serving]
    return power_rb_w * np.maximum(total - own, 0.0)
