"""AM demodulators (diode envelope detector, precision full-wave chain,
product detector) and the FM quadrature discriminator.

Op-amp non-ideality is modeled only as finite closed-loop bandwidth and slew
limiting of the output rate of change; offsets, bias currents and the 6 V
virtual ground of the hardware are omitted, signals stay bipolar around 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .exceptions import DetectorBandwidthWarning
from .filters import FilterSpec, apply_filter, design_single_pole_lowpass, single_pole_lowpass_coeffs
from .signal_core import ComplexSignal, RealSignal


@dataclass(frozen=True)
class EnvelopeDetectorConfig:
    """Diode-plus-RC envelope detector values. diode_drop_v = 0 models an
    ideal (precision) diode."""

    r_ohms: float
    c_farads: float
    diode_drop_v: float = 0.0

    def __post_init__(self):
        if self.r_ohms <= 0 or self.c_farads <= 0:
            raise ValueError("r_ohms and c_farads must be positive")
        if self.diode_drop_v < 0:
            raise ValueError("diode_drop_v must be >= 0")

    @property
    def time_constant_s(self) -> float:
        return self.r_ohms * self.c_farads


@dataclass(frozen=True)
class OpAmpModel:
    """Closed-loop bandwidth and slew-rate limits of the rectifier op-amps.

    Defaults follow the LM318: 15 MHz gain-bandwidth, 70 V/us slew rate.
    With enabled=False the rectification is ideal.
    """

    gain_bandwidth_hz: float = 15e6
    slew_rate_v_per_s: float = 70e6
    enabled: bool = True

    def __post_init__(self):
        if self.gain_bandwidth_hz <= 0 or self.slew_rate_v_per_s <= 0:
            raise ValueError("gain_bandwidth_hz and slew_rate_v_per_s must be positive")


def simple_envelope_detect(am: RealSignal, cfg: EnvelopeDetectorConfig) -> RealSignal:
    """Diode envelope detector: peak hold with exponential RC discharge.

    y[n] tracks x[n] - diode_drop when that exceeds the decayed hold value,
    otherwise discharges by exp(-1/(fs*RC)). The discharge uses the exact
    zero-order-hold solution of the RC network, stable at any sample rate.
    Output is non-negative; input entirely below the diode drop yields 0.
    """
    fs = am.sample_rate_hz
    rc = cfg.time_constant_s
    carrier_est = _peak_frequency_estimate(am)
    if carrier_est > 0 and rc * carrier_est < 10:
        warnings.warn(
            f"RC*fc = {rc * carrier_est:.1f} < 10: detector cannot hold the "
            "envelope between carrier peaks",
            DetectorBandwidthWarning,
            stacklevel=2,
        )
    decay = math.exp(-1.0 / (fs * rc))
    x = am.samples - cfg.diode_drop_v
    y = np.empty(len(am))
    held = 0.0
    for n in range(len(x)):
        held *= decay
        if x[n] > held:
            held = x[n]
        y[n] = held
    return RealSignal(fs, y)


def _peak_frequency_estimate(signal: RealSignal) -> float:
    n = min(len(signal), 1 << 18)
    if n < 8:
        return 0.0
    spec = np.abs(np.fft.rfft(signal.samples[:n]))
    spec[0] = 0.0
    k = int(np.argmax(spec))
    return k * signal.sample_rate_hz / n if spec[k] > 0 else 0.0


def predicted_ripple(
    v_peak_v: float, carrier_hz: float, r_ohms: float, c_farads: float
) -> float:
    """Peak-to-peak ripple of the simple detector: V_peak / (fc * R * C)."""
    if min(v_peak_v, carrier_hz, r_ohms, c_farads) < 0 or carrier_hz == 0 or r_ohms == 0 or c_farads == 0:
        raise ValueError("carrier_hz, r_ohms and c_farads must be positive, v_peak_v >= 0")
    return v_peak_v / (carrier_hz * r_ohms * c_farads)


def _slew_limit(y: np.ndarray, slew_v_per_s: float, fs: float) -> np.ndarray:
    max_step = slew_v_per_s / fs
    if len(y) < 2 or np.max(np.abs(np.diff(y))) <= max_step:
        return y
    out = np.empty_like(y)
    prev = y[0]
    out[0] = prev
    for n in range(1, len(y)):
        step = y[n] - prev
        if step > max_step:
            step = max_step
        elif step < -max_step:
            step = -max_step
        prev += step
        out[n] = prev
    return out


def precision_full_wave_rectify(am: RealSignal, opamp: OpAmpModel | None = None) -> RealSignal:
    """Full-wave precision rectification with recombination gain 2.

    Ideal mode returns 2*|x| (both half-waves gain 2, positive half flipped
    onto the negative). With the op-amp model enabled the result additionally
    passes a single pole at gain_bandwidth/2 (noise gain 2 recombination
    stage) and is slew limited.
    """
    y = 2.0 * np.abs(am.samples)
    if opamp is not None and opamp.enabled:
        b, a = single_pole_lowpass_coeffs(opamp.gain_bandwidth_hz / 2.0, am.sample_rate_hz)
        y = lfilter(b, a, y)
        y = _slew_limit(y, opamp.slew_rate_v_per_s, am.sample_rate_hz)
    return RealSignal(am.sample_rate_hz, y)


def demodulate_am(
    am: RealSignal,
    opamp: OpAmpModel | None = None,
    output_filter: FilterSpec | None = None,
) -> RealSignal:
    """Full AM demodulator: precision rectify, recombine, low-pass filter.

    The default output filter is the 10 kOhm / 22 nF single pole (723 Hz).
    The DC term of the rectified envelope is left in band; AC coupling is the
    following pre-emphasis stage's job, mirroring the hardware split.
    """
    if opamp is None:
        opamp = OpAmpModel()
    if output_filter is None:
        output_filter = design_single_pole_lowpass(10e3, 22e-9, am.sample_rate_hz)
    rectified = precision_full_wave_rectify(am, opamp)
    return apply_filter(rectified, output_filter)


def product_detect(
    am: RealSignal,
    lo_hz: float,
    lo_phase_rad: float = 0.0,
    output_filter: FilterSpec | None = None,
) -> RealSignal:
    """Synchronous detector: multiply by a local oscillator and low-pass.

    Recovered amplitude scales as cos(phase error); at pi/2 the message
    vanishes, which is why the hardware route needs a PLL.
    """
    fs = am.sample_rate_hz
    if output_filter is None:
        output_filter = design_single_pole_lowpass(10e3, 22e-9, fs)
    t = np.arange(len(am)) / fs
    mixed = RealSignal(fs, am.samples * np.cos(2 * np.pi * lo_hz * t + lo_phase_rad))
    return apply_filter(mixed, output_filter)


def fm_demodulate(iq: ComplexSignal) -> RealSignal:
    """Quadrature discriminator: instantaneous frequency in Hz.

    out[n] = fs/(2*pi) * arg(iq[n] * conj(iq[n-1])); the first sample is
    replicated so the output length matches the input.
    """
    x = iq.samples
    if len(x) == 0:
        return RealSignal(iq.sample_rate_hz, np.array([]))
    mag = np.abs(x)
    if np.any(mag == 0):
        bad = int(np.flatnonzero(mag == 0)[0])
        raise ValueError(f"zero-magnitude IQ sample at index {bad}")
    scale = iq.sample_rate_hz / (2 * np.pi)
    if len(x) == 1:
        return RealSignal(iq.sample_rate_hz, np.zeros(1))
    inst = scale * np.angle(x[1:] * np.conj(x[:-1]))
    return RealSignal(iq.sample_rate_hz, np.concatenate(([inst[0]], inst)))
