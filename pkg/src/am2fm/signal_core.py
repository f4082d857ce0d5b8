"""Waveform containers, deterministic test-signal generation and file I/O.

All containers are treated as immutable value objects: operations return new
signals and never write into an existing sample buffer, so they are safe to
share between threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .exceptions import ClippingWarning, FileFormatError, NyquistError


def _finite_or_raise(samples: np.ndarray, what: str) -> None:
    if samples.size and not np.all(np.isfinite(samples)):
        bad = int(np.flatnonzero(~np.isfinite(samples))[0])
        raise ValueError(f"{what} contains a non-finite value at sample {bad}")


@dataclass(frozen=True)
class RealSignal:
    """Uniformly sampled real-valued waveform in volts."""

    sample_rate_hz: float
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        arr = np.asarray(self.samples, dtype=np.float64)
        _finite_or_raise(arr, "RealSignal")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class ComplexSignal:
    """Complex-baseband IQ waveform.

    ``center_hz`` annotates the RF frequency that baseband 0 Hz represents;
    it does not affect the stored samples.
    """

    sample_rate_hz: float
    center_hz: float
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.size and not np.all(np.isfinite(arr.real) & np.isfinite(arr.imag)):
            bad = int(np.flatnonzero(~(np.isfinite(arr.real) & np.isfinite(arr.imag)))[0])
            raise ValueError(f"ComplexSignal contains a non-finite value at sample {bad}")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class ToneSpec:
    """Parameters of a single cosine test tone."""

    frequency_hz: float
    amplitude_v: float
    dc_offset_v: float = 0.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if self.frequency_hz < 0:
            raise ValueError("frequency_hz must be >= 0")
        if self.amplitude_v < 0:
            raise ValueError("amplitude_v must be >= 0")


def generate_tone(spec: ToneSpec, duration_s: float, sample_rate_hz: float) -> RealSignal:
    """Generate ``dc + A*cos(2*pi*f*t + phase)`` sampled at ``sample_rate_hz``.

    The output has exactly ``round(duration_s * sample_rate_hz)`` samples.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if spec.frequency_hz >= sample_rate_hz / 2:
        raise NyquistError(
            f"tone at {spec.frequency_hz} Hz is not below Nyquist "
            f"({sample_rate_hz / 2} Hz)"
        )
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    samples = spec.dc_offset_v + spec.amplitude_v * np.cos(
        2 * np.pi * spec.frequency_hz * t + spec.phase_rad
    )
    return RealSignal(sample_rate_hz, samples)


def load_wav(path) -> RealSignal:
    """Load a mono PCM or float WAV file.

    Integer samples are scaled to volts so that a full-scale value maps to
    1.0 (the inverse of :func:`save_wav`). Multi-channel files are rejected.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise FileFormatError(f"{path}: unsupported WAV encoding ({exc})") from exc
    if data.ndim != 1:
        raise FileFormatError(
            f"{path}: {data.shape[1]}-channel WAV not supported, mono required"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32767.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483647.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 127.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise FileFormatError(f"{path}: unsupported WAV sample type {data.dtype}")
    return RealSignal(float(rate), samples)


def save_wav(signal: RealSignal, path, bit_depth: str = "float32") -> None:
    """Write a mono WAV file.

    bit_depth "float32" is lossless; "int16" quantizes with saturation at
    +/-1.0 and emits a ClippingWarning when any sample is clipped.
    """
    _finite_or_raise(signal.samples, "save_wav input")
    rate = int(round(signal.sample_rate_hz))
    if bit_depth == "float32":
        wavfile.write(path, rate, signal.samples.astype(np.float32))
    elif bit_depth == "int16":
        x = signal.samples
        n_clipped = int(np.count_nonzero(np.abs(x) > 1.0))
        if n_clipped:
            warnings.warn(
                f"{n_clipped} samples exceed +/-1.0 and were saturated on 16-bit save",
                ClippingWarning,
                stacklevel=2,
            )
        q = np.clip(np.round(x * 32767.0), -32768, 32767).astype(np.int16)
        wavfile.write(path, rate, q)
    else:
        raise ValueError(f"unsupported bit_depth {bit_depth!r}")


def load_iq(path, sample_rate_hz: float, center_hz: float) -> ComplexSignal:
    """Load raw interleaved little-endian float32 I,Q pairs.

    The file carries no header: sample rate and center frequency are caller
    inputs, matching common SDR raw-capture practice.
    """
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 2 != 0:
        raise FileFormatError(f"{path}: truncated IQ file ({raw.size} floats, odd count)")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return ComplexSignal(sample_rate_hz, center_hz, samples)


def save_iq(signal: ComplexSignal, path) -> None:
    """Write raw interleaved little-endian float32 I,Q pairs."""
    out = np.empty(2 * len(signal.samples), dtype="<f4")
    out[0::2] = signal.samples.real.astype(np.float32)
    out[1::2] = signal.samples.imag.astype(np.float32)
    out.tofile(path)


def frequency_shift(signal: ComplexSignal, shift_hz: float) -> ComplexSignal:
    """Multiply by exp(j*2*pi*shift*t) and bump the center annotation by shift."""
    if abs(shift_hz) >= signal.sample_rate_hz / 2:
        raise NyquistError(
            f"shift of {shift_hz} Hz is not below Nyquist ({signal.sample_rate_hz / 2} Hz)"
        )
    n = np.arange(len(signal.samples))
    rot = np.exp(2j * np.pi * shift_hz * n / signal.sample_rate_hz)
    return ComplexSignal(
        signal.sample_rate_hz, signal.center_hz + shift_hz, signal.samples * rot
    )
