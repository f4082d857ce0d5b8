"""Discrete-time filter design, application, and swept-sine response analysis.

Filter prototypes mirror the analog networks of the converter: the single-pole
RC output filter and the tau1/tau2 pre-emphasis shelf (with its receive-side
inverse). Designs use the bilinear transform prewarped at the landmark
frequency so the -3 dB points survive discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.signal import lfilter

from .exceptions import NyquistError, SystemContractError
from .signal_core import RealSignal


@dataclass(frozen=True)
class FilterSpec:
    """Rational discrete-time transfer function b(z)/a(z) plus design metadata."""

    b: np.ndarray
    a: np.ndarray
    sample_rate_hz: float
    label: str = ""
    analog_taus_s: tuple = ()

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        if a[0] == 0:
            raise ValueError("leading denominator coefficient must be nonzero")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    def poles(self) -> np.ndarray:
        if len(self.a) < 2:
            return np.array([], dtype=np.complex128)
        return np.roots(self.a)

    @property
    def is_stable(self) -> bool:
        poles = self.poles()
        return bool(np.all(np.abs(poles) < 1.0)) if poles.size else True

    def response_at(self, freq_hz) -> np.ndarray:
        """Complex frequency response H(e^{j*2*pi*f/fs})."""
        w = 2 * np.pi * np.asarray(freq_hz, dtype=np.float64) / self.sample_rate_hz
        zinv = np.exp(-1j * w)
        num = sum(bk * zinv**k for k, bk in enumerate(self.b))
        den = sum(ak * zinv**k for k, ak in enumerate(self.a))
        return num / den


@dataclass
class FilterState:
    """Running direct-form state for streaming apply_filter calls.

    Single-owner: one state object per stream, never shared across streams.
    """

    zi: np.ndarray

    @classmethod
    def zeros(cls, spec: FilterSpec) -> "FilterState":
        return cls(np.zeros(max(len(spec.a), len(spec.b)) - 1))


class SweepResult:
    """Frequency-response measurement: (frequency, gain dB, phase deg) rows."""

    def __init__(self, frequencies_hz, gains_db, phases_deg):
        f = np.asarray(frequencies_hz, dtype=np.float64)
        if f.size and np.any(np.diff(f) <= 0):
            raise ValueError("sweep frequencies must be strictly increasing")
        self.frequencies_hz = f
        self.gains_db = np.asarray(gains_db, dtype=np.float64)
        self.phases_deg = np.asarray(phases_deg, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.frequencies_hz)

    def __iter__(self):
        return iter(zip(self.frequencies_hz, self.gains_db, self.phases_deg))

    def gain_at(self, freq_hz: float) -> float:
        """Gain interpolated on a log-frequency axis."""
        return float(
            np.interp(np.log10(freq_hz), np.log10(self.frequencies_hz), self.gains_db)
        )

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("freq_hz,gain_db,phase_deg\n")
            for f, g, p in self:
                fh.write(f"{f:.6f},{g:.6f},{p:.6f}\n")


class ShelfLandmarks(NamedTuple):
    """Measured features of a shelf response (Bode asymptote construction)."""

    low_plateau_db: float
    high_plateau_db: float
    f_low_hz: float
    f_high_hz: float
    midband_slope_db_per_decade: float


def _prewarped_pole(cutoff_hz: float, sample_rate_hz: float) -> float:
    # analog pole frequency (rad/s) that the bilinear transform maps exactly
    # onto cutoff_hz in the digital domain
    return 2 * sample_rate_hz * math.tan(math.pi * cutoff_hz / sample_rate_hz)


def single_pole_lowpass_coeffs(cutoff_hz: float, sample_rate_hz: float):
    """First-order low-pass coefficients valid at any cutoff/fs ratio.

    Below 0.45*fs: bilinear transform prewarped at the cutoff (exact -3 dB
    landmark). At or above: matched-z pole, since tan() prewarping has no
    solution once the pole crosses Nyquist; the in-band response of such a
    far-out pole is what matters and the matched-z form preserves it.
    """
    if cutoff_hz <= 0:
        raise ValueError("cutoff must be positive")
    if cutoff_hz < 0.45 * sample_rate_hz:
        wp = _prewarped_pole(cutoff_hz, sample_rate_hz)
        k = 2 * sample_rate_hz
        b = np.array([wp / (k + wp), wp / (k + wp)])
        a = np.array([1.0, (wp - k) / (k + wp)])
    else:
        p = math.exp(-2 * math.pi * cutoff_hz / sample_rate_hz)
        b = np.array([1.0 - p])
        a = np.array([1.0, -p])
    return b, a


def design_single_pole_lowpass(
    r_ohms: float, c_farads: float, sample_rate_hz: float
) -> FilterSpec:
    """Single-pole RC low-pass with the -3 dB point at 1/(2*pi*R*C).

    Prewarped bilinear transform; DC gain is exactly 1.
    """
    if r_ohms <= 0 or c_farads <= 0 or sample_rate_hz <= 0:
        raise ValueError("r_ohms, c_farads and sample_rate_hz must be positive")
    tau = r_ohms * c_farads
    cutoff = 1.0 / (2 * math.pi * tau)
    if cutoff >= sample_rate_hz / 2:
        raise NyquistError(
            f"cutoff {cutoff:.1f} Hz is not below Nyquist ({sample_rate_hz / 2:.1f} Hz)"
        )
    b, a = single_pole_lowpass_coeffs(cutoff, sample_rate_hz)
    return FilterSpec(b, a, sample_rate_hz, label=f"rc_lowpass_{cutoff:.0f}Hz",
                      analog_taus_s=(tau,))


def design_preemphasis(
    sample_rate_hz: float,
    tau1_s: float = 500e-6,
    tau2_s: float = 75e-6,
    amp_gain: float = 3.0,
) -> FilterSpec:
    """Pre-emphasis shelf k*(1 + s*tau1)/(1 + s*tau2).

    k is chosen so the high-frequency asymptotic gain equals amp_gain, which
    puts the DC gain at amp_gain*tau2/tau1 (0.45 for the defaults). The rise
    between the 1/(2*pi*tau1) and 1/(2*pi*tau2) corners follows the
    +20 dB/decade first-order asymptote.
    """
    if not (tau1_s > tau2_s > 0):
        raise ValueError("tau1_s must exceed tau2_s and both must be positive")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    pole_hz = 1.0 / (2 * math.pi * tau2_s)
    if pole_hz >= sample_rate_hz / 2:
        raise NyquistError(
            f"shelf pole {pole_hz:.1f} Hz is not below Nyquist "
            f"({sample_rate_hz / 2:.1f} Hz)"
        )
    k_gain = amp_gain * tau2_s / tau1_s
    # bilinear transform prewarped at the pole frequency
    w_pole = 2 * math.pi * pole_hz
    bilinear_k = w_pole / math.tan(w_pole / (2 * sample_rate_hz))
    b = k_gain * np.array([1 + bilinear_k * tau1_s, 1 - bilinear_k * tau1_s])
    a = np.array([1 + bilinear_k * tau2_s, 1 - bilinear_k * tau2_s])
    b = b / a[0]
    a = a / a[0]
    return FilterSpec(b, a, sample_rate_hz, label="preemphasis",
                      analog_taus_s=(tau1_s, tau2_s))


def design_deemphasis(
    sample_rate_hz: float,
    tau1_s: float = 500e-6,
    tau2_s: float = 75e-6,
    amp_gain: float = 3.0,
) -> FilterSpec:
    """Exact reciprocal of :func:`design_preemphasis` at the same settings.

    Cascading the two is allpass to numerical precision. The inverse is
    stable because the shelf zero sits inside the unit circle.
    """
    pre = design_preemphasis(sample_rate_hz, tau1_s, tau2_s, amp_gain)
    b = pre.a / pre.b[0]
    a = pre.b / pre.b[0]
    return FilterSpec(b, a, sample_rate_hz, label="deemphasis",
                      analog_taus_s=(tau1_s, tau2_s))


def apply_filter(
    signal: RealSignal, spec: FilterSpec, state: FilterState | None = None
) -> RealSignal:
    """Run the direct-form difference equation over a buffer.

    With a FilterState the call is streaming-consistent: filtering two half
    buffers through the same state is bit-identical to one whole-buffer call.
    """
    if spec.sample_rate_hz != signal.sample_rate_hz:
        raise ValueError(
            f"filter designed at {spec.sample_rate_hz} Hz applied to signal "
            f"at {signal.sample_rate_hz} Hz"
        )
    x = signal.samples
    if x.size and not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValueError(f"non-finite input sample at index {bad}")
    if state is not None:
        y, zf = lfilter(spec.b, spec.a, x, zi=state.zi)
        state.zi = zf
    else:
        y = lfilter(spec.b, spec.a, x)
    if y.size and not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise ValueError(f"filter produced a non-finite value at index {bad}")
    return RealSignal(signal.sample_rate_hz, y)


def fra_sweep(
    system: Callable[[RealSignal], RealSignal],
    f_start_hz: float,
    f_stop_hz: float,
    points_per_decade: int,
    probe_amplitude_v: float,
    sample_rate_hz: float,
    time_constant_s: float | None = None,
) -> SweepResult:
    """Swept-sine frequency response of an arbitrary signal transform.

    For each log-spaced probe frequency a tone is injected, the output is
    allowed to settle for at least 10 periods (and 5 time constants when
    given), and gain/phase are measured by single-bin correlation over an
    integer number of periods.
    """
    if f_start_hz <= 0 or f_start_hz >= f_stop_hz:
        raise ValueError("need 0 < f_start_hz < f_stop_hz")
    if f_stop_hz >= sample_rate_hz / 2:
        raise NyquistError("f_stop_hz is not below Nyquist")
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be >= 1")

    n_points = int(math.floor(math.log10(f_stop_hz / f_start_hz) * points_per_decade))
    freqs = f_start_hz * 10 ** (np.arange(n_points + 1) / points_per_decade)
    if freqs[-1] < f_stop_hz * (1 - 1e-9):
        freqs = np.append(freqs, f_stop_hz)
    freqs[-1] = min(freqs[-1], f_stop_hz)

    gains = np.empty(len(freqs))
    phases = np.empty(len(freqs))
    for i, f in enumerate(freqs):
        settle_s = 10.0 / f
        if time_constant_s is not None:
            settle_s = max(settle_s, 5.0 * time_constant_s)
        n_settle = int(math.ceil(settle_s * sample_rate_hz))
        n_periods = max(16, int(math.ceil(0.02 * f)))
        n_meas = int(round(n_periods * sample_rate_hz / f))
        n_total = n_settle + n_meas
        t = np.arange(n_total) / sample_rate_hz
        probe = RealSignal(sample_rate_hz, probe_amplitude_v * np.cos(2 * np.pi * f * t))
        out = system(probe)
        if len(out) != n_total:
            raise SystemContractError(
                f"system returned {len(out)} samples for a {n_total}-sample probe"
            )
        sel = slice(n_settle, n_total)
        ref = np.exp(-2j * np.pi * f * t[sel])
        c_in = np.sum(probe.samples[sel] * ref)
        c_out = np.sum(out.samples[sel] * ref)
        h = c_out / c_in
        gains[i] = 20 * np.log10(np.abs(h))
        phases[i] = np.degrees(np.angle(h))
    return SweepResult(freqs, gains, phases)


def measure_shelf_landmarks(sweep: SweepResult, n_plateau_points: int = 3) -> ShelfLandmarks:
    """Extract shelf features from a sweep via the Bode asymptote construction.

    The low/high plateaus are averaged from the sweep edges; the crossover
    frequencies are where the response is 3 dB inside each plateau; and the
    midband slope is the plateau-to-plateau rise divided by the decade span
    between crossovers (the slope of the connecting asymptote).
    """
    if len(sweep) < 2 * n_plateau_points + 2:
        raise ValueError("sweep has too few points for landmark extraction")
    g = sweep.gains_db
    f = sweep.frequencies_hz
    low = float(np.mean(g[:n_plateau_points]))
    high = float(np.mean(g[-n_plateau_points:]))
    rising = high >= low
    t_low = low + 3.0103 if rising else low - 3.0103
    t_high = high - 3.0103 if rising else high + 3.0103

    def crossing(target: float, from_low: bool) -> float:
        idx = range(len(g) - 1) if from_low else range(len(g) - 2, -1, -1)
        for i in idx:
            g0, g1 = g[i], g[i + 1]
            if (g0 - target) * (g1 - target) <= 0 and g0 != g1:
                frac = (target - g0) / (g1 - g0)
                return float(10 ** (np.log10(f[i]) + frac * (np.log10(f[i + 1] / f[i]))))
        raise ValueError(f"no crossing of {target:.2f} dB found in sweep")

    f_low = crossing(t_low, from_low=True)
    f_high = crossing(t_high, from_low=False)
    slope = (high - low) / math.log10(f_high / f_low)
    return ShelfLandmarks(low, high, f_low, f_high, slope)
