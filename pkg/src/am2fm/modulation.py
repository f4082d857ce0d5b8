"""AM and FM waveform synthesis plus an ideal multiplier for mixing experiments."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import AliasingWarning, AmBandWarning, NyquistError
from .signal_core import ComplexSignal, RealSignal

AM_BAND_HZ = (530e3, 1700e3)


@dataclass(frozen=True)
class AmParams:
    """AM settings for out = (m*message + 1) * A * cos(2*pi*fc*t).

    The message is expected normalized to peak 1 by the caller; with
    modulation_depth m the envelope of a full-swing sinusoid message spans
    A*(1-m) .. A*(1+m).
    """

    carrier_hz: float
    carrier_amplitude_v: float = 1.0
    modulation_depth: float = 1.0

    def __post_init__(self):
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if self.carrier_amplitude_v <= 0:
            raise ValueError("carrier_amplitude_v must be positive")
        if not 0.0 <= self.modulation_depth <= 1.0:
            raise ValueError("modulation_depth must lie in [0, 1]")
        if not AM_BAND_HZ[0] <= self.carrier_hz <= AM_BAND_HZ[1]:
            warnings.warn(
                f"carrier {self.carrier_hz / 1e3:.1f} kHz is outside the "
                "530-1700 kHz AM broadcast band",
                AmBandWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class FmParams:
    """FM settings: carrier annotation and modulation sensitivity in Hz/V."""

    center_hz: float
    deviation_hz_per_volt: float

    def __post_init__(self):
        if self.deviation_hz_per_volt <= 0:
            raise ValueError("deviation_hz_per_volt must be positive")


def am_modulate(message: RealSignal, params: AmParams) -> RealSignal:
    """Amplitude-modulate a normalized message onto a carrier."""
    fs = message.sample_rate_hz
    if params.carrier_hz >= fs / 2:
        raise NyquistError(
            f"carrier {params.carrier_hz} Hz is not below Nyquist ({fs / 2} Hz)"
        )
    peak = np.max(np.abs(message.samples)) if len(message) else 0.0
    if peak > 1.0 + 1e-12:
        raise ValueError(
            f"message peak {peak:.6g} exceeds 1.0; normalize before modulating"
        )
    t = np.arange(len(message)) / fs
    envelope = params.modulation_depth * message.samples + 1.0
    samples = envelope * (params.carrier_amplitude_v * np.cos(2 * np.pi * params.carrier_hz * t))
    return RealSignal(fs, samples)


def _wrap_phase(phase: np.ndarray) -> np.ndarray:
    # keep the accumulated phase in (-pi, pi]; wraps are exact multiples of
    # 2*pi so the waveform is unchanged while exp() stays well-conditioned
    return phase - 2 * np.pi * np.round(phase / (2 * np.pi))


def fm_modulate(
    message: RealSignal, params: FmParams, integration: str = "rectangular"
) -> ComplexSignal:
    """Frequency-modulate a message to complex baseband.

    The running phase accumulates 2*pi*kf*message[n]/fs per sample
    (rectangular integration; "trapezoidal" averages adjacent samples, the
    difference is second order in 1/fs). Output modulus is exactly 1.
    """
    fs = message.sample_rate_hz
    kf = params.deviation_hz_per_volt
    if len(message):
        peak_dev = kf * np.max(np.abs(message.samples))
        if peak_dev >= fs / 2:
            raise NyquistError(
                f"peak deviation {peak_dev:.1f} Hz is not below Nyquist ({fs / 2} Hz)"
            )
    if integration == "rectangular":
        inst = message.samples
    elif integration == "trapezoidal":
        inst = message.samples.copy()
        if len(inst) > 1:
            inst[1:] = 0.5 * (message.samples[1:] + message.samples[:-1])
    else:
        raise ValueError(f"unknown integration {integration!r}")
    phase = _wrap_phase(np.cumsum(2 * np.pi * kf * inst / fs))
    return ComplexSignal(fs, params.center_hz, np.exp(1j * phase))


def _occupied_max_hz(signal: RealSignal, floor_db: float = -60.0) -> float:
    """Highest frequency whose spectral magnitude is within floor_db of the peak."""
    n = min(len(signal), 1 << 18)
    if n < 4:
        return 0.0
    spec = np.abs(np.fft.rfft(signal.samples[:n]))
    peak = spec.max()
    if peak <= 0:
        return 0.0
    significant = np.flatnonzero(spec >= peak * 10 ** (floor_db / 20))
    return float(significant[-1] * signal.sample_rate_hz / n)


def mix(signal: RealSignal, lo_hz: float) -> RealSignal:
    """Multiply by a unit local-oscillator cosine.

    A tone at fb lands at fb-lo and fb+lo, each at half the input amplitude.
    If the sum product would cross Nyquist an AliasingWarning is emitted but
    the (aliased) output is still produced.
    """
    fs = signal.sample_rate_hz
    if lo_hz < 0:
        raise ValueError("lo_hz must be >= 0")
    if lo_hz >= fs / 2:
        raise NyquistError(f"LO {lo_hz} Hz is not below Nyquist ({fs / 2} Hz)")
    f_max = _occupied_max_hz(signal)
    if f_max + lo_hz >= fs / 2:
        warnings.warn(
            f"sum product near {f_max + lo_hz:.0f} Hz folds across Nyquist "
            f"({fs / 2:.0f} Hz)",
            AliasingWarning,
            stacklevel=2,
        )
    t = np.arange(len(signal)) / fs
    return RealSignal(fs, signal.samples * np.cos(2 * np.pi * lo_hz * t))
