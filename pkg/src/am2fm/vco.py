"""Behavioral varactor-tuned oscillator model.

Covers the varactor C(V) law, the LC tank, the bias-conditioning adder, a
phase-accumulator synthesizer with optional soft-clip nonlinearity for
harmonic studies, and the emitter-follower small-signal calculator. The
transistor-level loop (start-up dynamics, amplitude build-up) is out of
scope; the model is the tank resonance driven by the conditioned bias.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .exceptions import BiasClampWarning, NyquistError
from .filters import single_pole_lowpass_coeffs
from .signal_core import ComplexSignal, RealSignal

BIAS_RANGE_V = (0.0, 12.0)


@dataclass(frozen=True)
class VaractorModel:
    """Reverse-bias capacitance law of a single varactor diode.

    law "junction" is the standard graded-junction model
    C(V) = Cj0 / (1 + V/phi)^gamma. law "exponential" follows the
    datasheet's approximately exponential capacitance swing,
    C(V) = Cj0 * exp(-gamma * V / phi), with gamma/phi the reciprocal
    e-folding voltage. Both clamp at c_min_f.
    """

    c_zero_bias_f: float
    phi_v: float = 0.7
    gamma: float = 0.5
    c_min_f: float = 12e-12
    law: str = "junction"

    def __post_init__(self):
        if self.c_zero_bias_f <= 0 or self.phi_v <= 0 or self.gamma <= 0 or self.c_min_f <= 0:
            raise ValueError("varactor parameters must be positive")
        if self.law not in ("junction", "exponential"):
            raise ValueError(f"unknown varactor law {self.law!r}")


@dataclass(frozen=True)
class TankCircuit:
    """LC tank: fixed capacitor combination in parallel with a series pair of
    varactors (combined C(V)/2)."""

    inductance_h: float = 50e-9
    fixed_caps_f: tuple = (15e-12, 15e-12)
    fixed_combination: str = "series"
    varactor: VaractorModel = field(default_factory=lambda: VaractorModel(100e-12))

    def __post_init__(self):
        if self.inductance_h <= 0:
            raise ValueError("inductance_h must be positive")
        if not self.fixed_caps_f or any(c <= 0 for c in self.fixed_caps_f):
            raise ValueError("fixed_caps_f must be positive")
        if self.fixed_combination not in ("series", "parallel"):
            raise ValueError("fixed_combination must be 'series' or 'parallel'")

    @property
    def fixed_capacitance_f(self) -> float:
        if self.fixed_combination == "series":
            return 1.0 / sum(1.0 / c for c in self.fixed_caps_f)
        return float(sum(self.fixed_caps_f))

    def total_capacitance_f(self, v_reverse) -> np.ndarray:
        series_pair = varactor_capacitance(self.varactor, v_reverse) / 2.0
        return self.fixed_capacitance_f + series_pair


@dataclass(frozen=True)
class BiasConditioner:
    """Non-inverting adder settings for the varactor bias line."""

    dc_set_v: float
    ac_attenuation: float = 1.0
    adder_gain: float = 2.0
    isolation_r_ohms: float = 20e3
    varactor_load_c_f: float = 100e-12

    def __post_init__(self):
        if not BIAS_RANGE_V[0] <= self.dc_set_v <= BIAS_RANGE_V[1]:
            raise ValueError("dc_set_v must lie in [0, 12] V")
        if not 0.0 <= self.ac_attenuation <= 1.0:
            raise ValueError("ac_attenuation must lie in [0, 1]")

    @property
    def isolation_cutoff_hz(self) -> float:
        return 1.0 / (2 * math.pi * self.isolation_r_ohms * self.varactor_load_c_f)


@dataclass(frozen=True)
class VcoConfig:
    """Complete oscillator model: tank, bias conditioner, calibration knobs."""

    tank: TankCircuit = field(default_factory=TankCircuit)
    bias: BiasConditioner = field(default_factory=lambda: BiasConditioner(3.0))
    parasitic_scale: float = 1.0
    nonlinearity: float = 0.0
    center_jitter_std_hz: float = 0.0

    def __post_init__(self):
        if self.parasitic_scale <= 0:
            raise ValueError("parasitic_scale must be positive")
        if self.nonlinearity < 0 or self.center_jitter_std_hz < 0:
            raise ValueError("nonlinearity and center_jitter_std_hz must be >= 0")


def varactor_capacitance(model: VaractorModel, v_reverse) -> np.ndarray:
    """Capacitance of one device at the given reverse bias (array friendly)."""
    v = np.asarray(v_reverse, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("reverse bias must be >= 0 (forward bias out of scope)")
    if model.law == "junction":
        c = model.c_zero_bias_f / (1.0 + v / model.phi_v) ** model.gamma
    else:
        c = model.c_zero_bias_f * np.exp(-model.gamma * v / model.phi_v)
    return np.maximum(c, model.c_min_f)


def tank_resonant_frequency(l_h: float, c_total_f: float) -> float:
    """LC tank resonance 1/(2*pi*sqrt(L*C))."""
    if l_h <= 0 or c_total_f <= 0:
        raise ValueError("l_h and c_total_f must be positive")
    return 1.0 / (2 * math.pi * math.sqrt(l_h * c_total_f))


def condition_bias(audio: RealSignal, bias: BiasConditioner) -> RealSignal:
    """Produce the varactor bias line from an audio signal.

    The audio is AC coupled (mean removed), attenuated, low-passed by the
    isolation resistor against the varactor load, then added to twice the DC
    set point. Samples outside 0-12 V are clamped with a warning.
    """
    from scipy.signal import lfilter

    fs = audio.sample_rate_hz
    ac = audio.samples - (np.mean(audio.samples) if len(audio) else 0.0)
    ac = bias.ac_attenuation * ac
    b, a = single_pole_lowpass_coeffs(bias.isolation_cutoff_hz, fs)
    ac = lfilter(b, a, ac)
    v = bias.adder_gain * bias.dc_set_v + ac
    lo, hi = BIAS_RANGE_V
    n_clamped = int(np.count_nonzero((v < lo) | (v > hi)))
    if n_clamped:
        warnings.warn(
            f"{n_clamped} bias samples clamped to [{lo:.0f}, {hi:.0f}] V",
            BiasClampWarning,
            stacklevel=2,
        )
        v = np.clip(v, lo, hi)
    return RealSignal(fs, v)


def _frequency_of_bias(cfg: VcoConfig, v) -> np.ndarray:
    c_total = cfg.tank.total_capacitance_f(v) * cfg.parasitic_scale
    return 1.0 / (2 * np.pi * np.sqrt(cfg.tank.inductance_h * c_total))


def vco_frequency(cfg: VcoConfig, v_bias: float) -> float:
    """Oscillation frequency at a DC bias point; strictly increasing in bias."""
    if not BIAS_RANGE_V[0] <= v_bias <= BIAS_RANGE_V[1]:
        raise ValueError(f"bias {v_bias} V outside [0, 12] V")
    return float(_frequency_of_bias(cfg, v_bias))


def tuning_curve(cfg: VcoConfig, v_min: float, v_max: float, steps: int) -> np.ndarray:
    """Sampled (bias_v, frequency_hz) curve, shape (steps, 2)."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not (BIAS_RANGE_V[0] <= v_min < v_max <= BIAS_RANGE_V[1]):
        raise ValueError("need 0 <= v_min < v_max <= 12")
    v = np.linspace(v_min, v_max, steps)
    return np.column_stack([v, _frequency_of_bias(cfg, v)])


def tuning_curve_to_csv(curve: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write("bias_v,freq_hz\n")
        for v, f in curve:
            fh.write(f"{v:.6f},{f:.3f}\n")


def vco_synthesize(
    cfg: VcoConfig,
    bias_signal: RealSignal,
    output_mode: str = "baseband",
    center_hz: float | None = None,
    rng: np.random.Generator | None = None,
    jitter_block: int = 1024,
):
    """Phase-accumulator synthesis of the oscillator output.

    output_mode "baseband" returns a unit-modulus ComplexSignal whose phase
    accumulates the deviation from center_hz (default: the frequency at the
    mean bias). output_mode "real" returns the real waveform and applies the
    soft-clip nonlinearity (tanh shaped, cfg.nonlinearity strength) that
    stands in for the transistor's large-signal harmonics; it requires
    fs >= 2.5x the highest instantaneous frequency.

    Optional center jitter draws one zero-mean Gaussian frequency offset per
    jitter_block samples from rng (default seed 0 generator).
    """
    v = bias_signal.samples
    if len(v) == 0:
        raise ValueError("bias signal is empty")
    if np.min(v) < BIAS_RANGE_V[0] or np.max(v) > BIAS_RANGE_V[1]:
        raise ValueError("bias signal leaves the [0, 12] V range")
    fs = bias_signal.sample_rate_hz
    f_inst = _frequency_of_bias(cfg, v)
    if cfg.center_jitter_std_hz > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        n_blocks = (len(v) + jitter_block - 1) // jitter_block
        offsets = rng.normal(0.0, cfg.center_jitter_std_hz, n_blocks)
        f_inst = f_inst + np.repeat(offsets, jitter_block)[: len(v)]

    if output_mode == "baseband":
        if center_hz is None:
            center_hz = float(_frequency_of_bias(cfg, np.mean(v)))
        dev = f_inst - center_hz
        peak = np.max(np.abs(dev))
        if peak >= fs / 2:
            raise NyquistError(
                f"peak deviation {peak:.0f} Hz is not below Nyquist ({fs / 2:.0f} Hz)"
            )
        phase = _accumulate_phase(dev, fs)
        return ComplexSignal(fs, center_hz, np.exp(1j * phase))
    if output_mode == "real":
        f_max = float(np.max(f_inst))
        if fs < 2.5 * f_max:
            raise NyquistError(
                f"real mode needs fs >= 2.5x max frequency ({2.5 * f_max:.0f} Hz), got {fs:.0f}"
            )
        phase = _accumulate_phase(f_inst, fs)
        y = np.cos(phase)
        if cfg.nonlinearity > 0:
            k = cfg.nonlinearity
            y = np.tanh(k * y) / math.tanh(k)
        return RealSignal(fs, y)
    raise ValueError(f"unknown output_mode {output_mode!r}")


def _accumulate_phase(freq_hz: np.ndarray, fs: float) -> np.ndarray:
    phase = np.cumsum(2 * np.pi * freq_hz / fs)
    # wraps are exact multiples of 2*pi, keeping exp()/cos() well conditioned
    return phase - 2 * np.pi * np.round(phase / (2 * np.pi))


def calibrate_vco(
    f_low_hz: float = 66e6,
    f_high_hz: float = 102e6,
    c_zero_bias_f: float = 100e-12,
    phi_v: float = 0.7,
    c_min_f: float = 12e-12,
    inductance_h: float = 50e-9,
    fixed_caps_f: tuple = (15e-12, 15e-12),
    bias: BiasConditioner | None = None,
    nonlinearity: float = 0.0,
    center_jitter_std_hz: float = 0.0,
) -> VcoConfig:
    """Solve the varactor shape and parasitic scale for the measured range.

    Fits an exponential-law varactor so vco_frequency(0 V) = f_low_hz and
    vco_frequency(12 V) = f_high_hz. The parasitic scale absorbs the gap
    between the ideal tank resonance and the constructed oscillator. The
    exponential law is used because a graded-junction power law cannot hold
    the measured endpoints while keeping the tuning slope growing with bias.
    """
    if not 0 < f_low_hz < f_high_hz:
        raise ValueError("need 0 < f_low_hz < f_high_hz")
    c_fix = TankCircuit(inductance_h, fixed_caps_f).fixed_capacitance_f
    c_total_low = c_fix + c_zero_bias_f / 2.0
    c_total_high = c_total_low * (f_low_hz / f_high_hz) ** 2
    cv_high = 2.0 * (c_total_high - c_fix)
    if cv_high <= c_min_f:
        raise ValueError(
            "calibration drives the varactor below its minimum capacitance; "
            "increase c_zero_bias_f"
        )
    v_hi = BIAS_RANGE_V[1]
    gamma = -(phi_v / v_hi) * math.log(cv_high / c_zero_bias_f)
    parasitic_scale = (1.0 / (2 * math.pi * f_low_hz)) ** 2 / (inductance_h * c_total_low)
    varactor = VaractorModel(c_zero_bias_f, phi_v, gamma, c_min_f, law="exponential")
    tank = TankCircuit(inductance_h, fixed_caps_f, "series", varactor)
    if bias is None:
        bias = BiasConditioner(3.0)
    return VcoConfig(tank, bias, parasitic_scale, nonlinearity, center_jitter_std_hz)


def calibrate_soft_clip(target_dbc: float = -15.0) -> float:
    """Solve the tanh soft-clip strength whose strongest harmonic sits at
    target_dbc relative to the fundamental."""
    if target_dbc >= 0:
        raise ValueError("target_dbc must be negative")

    n = 4096
    theta = 2 * np.pi * np.arange(n) / n

    def strongest_dbc(k: float) -> float:
        y = np.tanh(k * np.cos(theta))
        coeffs = np.abs(np.fft.rfft(y)) * 2 / n
        fund = coeffs[1]
        strongest = np.max(coeffs[2:20])
        return 20 * math.log10(strongest / fund)

    return float(brentq(lambda k: strongest_dbc(k) - target_dbc, 0.05, 8.0, xtol=1e-6))


class EmitterFollowerResult(NamedTuple):
    gain: float
    input_resistance_ohms: float
    output_resistance_ohms: float


def emitter_follower_small_signal(
    r_source_ohms: float, r_pi_ohms: float, beta: float, r_emitter_ohms: float
) -> EmitterFollowerResult:
    """Closed-form emitter-follower buffer figures.

    gain = 1 / (1 + R/RE) with R = (RS + r_pi)/(beta + 1);
    r_in = r_pi + (beta + 1)*RE; r_out = RE || (r_pi + RS)/(beta + 1).
    """
    if min(r_source_ohms, r_pi_ohms, beta, r_emitter_ohms) <= 0:
        raise ValueError("all emitter-follower parameters must be positive")
    r = (r_source_ohms + r_pi_ohms) / (beta + 1.0)
    gain = 1.0 / (1.0 + r / r_emitter_ohms)
    r_in = r_pi_ohms + (beta + 1.0) * r_emitter_ohms
    r_reflected = (r_pi_ohms + r_source_ohms) / (beta + 1.0)
    r_out = r_emitter_ohms * r_reflected / (r_emitter_ohms + r_reflected)
    return EmitterFollowerResult(gain, r_in, r_out)
