"""Measurement suite: calibrated spectra, harmonic/THD reports, image
arithmetic, slew-rate bandwidth, and waveform fidelity scoring.

Spectra are amplitude calibrated (window coherent gain corrected) so a tone
centered on a bin reads its true RMS level in dB re 1 V RMS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import correlate

from .exceptions import HarmonicDetectionError
from .signal_core import ComplexSignal, RealSignal

SNR_CAP_DB = 120.0
_DB_FLOOR = 1e-15

_WINDOWS = {
    "rectangular": np.ones,
    "hann": np.hanning,
    "hamming": np.hamming,
    "blackman": np.blackman,
}


@dataclass(frozen=True)
class Spectrum:
    """Single FFT magnitude spectrum in dB re 1 V RMS per bin."""

    bin_width_hz: float
    start_hz: float
    magnitudes_db: np.ndarray
    window: str

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.start_hz + self.bin_width_hz * np.arange(len(self.magnitudes_db))

    def bin_of(self, freq_hz: float) -> int:
        return int(round((freq_hz - self.start_hz) / self.bin_width_hz))

    def peak_frequency_hz(self, min_hz: float | None = None, max_hz: float | None = None) -> float:
        """Frequency of the strongest bin, optionally restricted to a band."""
        f = self.frequencies_hz
        mask = np.ones(len(f), dtype=bool)
        if min_hz is not None:
            mask &= f >= min_hz
        if max_hz is not None:
            mask &= f <= max_hz
        if not np.any(mask):
            raise ValueError("no bins inside the requested band")
        idx = np.flatnonzero(mask)
        return float(f[idx[np.argmax(self.magnitudes_db[idx])]])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("freq_hz,mag_db\n")
            for f, m in zip(self.frequencies_hz, self.magnitudes_db):
                fh.write(f"{f:.6f},{m:.6f}\n")


class HarmonicLine(NamedTuple):
    order: int
    frequency_hz: float
    level_dbc: float


@dataclass(frozen=True)
class HarmonicReport:
    """Per-harmonic levels relative to the fundamental plus THD."""

    fundamental_hz: float
    fundamental_db: float
    harmonics: tuple
    thd_percent: float

    def level_dbc(self, order: int) -> float:
        for line in self.harmonics:
            if line.order == order:
                return line.level_dbc
        raise KeyError(f"harmonic order {order} not in report")

    @property
    def strongest_harmonic_dbc(self) -> float:
        if not self.harmonics:
            return -math.inf
        return max(line.level_dbc for line in self.harmonics)

    def to_text(self) -> str:
        lines = [
            f"fundamental: {self.fundamental_hz:.3f} Hz at {self.fundamental_db:+.2f} dB",
        ]
        for h in self.harmonics:
            lines.append(f"  H{h.order}: {h.frequency_hz:.3f} Hz  {h.level_dbc:+.2f} dBc")
        lines.append(f"THD: {self.thd_percent:.4f} %")
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("order,freq_hz,level_dbc\n")
            fh.write(f"1,{self.fundamental_hz:.6f},0.000000\n")
            for h in self.harmonics:
                fh.write(f"{h.order},{h.frequency_hz:.6f},{h.level_dbc:.6f}\n")


def _window(name: str, nfft: int) -> np.ndarray:
    try:
        return _WINDOWS[name](nfft)
    except KeyError:
        raise ValueError(f"unknown window {name!r}; choose from {sorted(_WINDOWS)}")


def compute_spectrum(signal, nfft: int | None = None, window: str = "hann") -> Spectrum:
    """Windowed FFT magnitude spectrum of a real or complex signal.

    Real input gives a single-sided spectrum from 0 Hz; complex input a
    two-sided spectrum from -fs/2 (baseband frequencies, the center
    annotation is not folded in). nfft must be a power of two >= 64 and no
    longer than the signal; the first nfft samples are used.
    """
    x = signal.samples
    if nfft is None:
        nfft = 1 << max(6, int(math.floor(math.log2(max(len(x), 1)))))
    if nfft < 64 or nfft & (nfft - 1):
        raise ValueError("nfft must be a power of two >= 64")
    if len(x) < nfft:
        raise ValueError(f"signal has {len(x)} samples, shorter than nfft={nfft}")
    w = _window(window, nfft)
    wsum = np.sum(w)
    fs = signal.sample_rate_hz
    bin_width = fs / nfft

    if isinstance(signal, ComplexSignal) or np.iscomplexobj(x):
        spec = np.fft.fftshift(np.fft.fft(x[:nfft] * w))
        power = (np.abs(spec) / wsum) ** 2
        start = -fs / 2
    else:
        spec = np.fft.rfft(x[:nfft] * w)
        amp = np.abs(spec) / wsum
        power = np.empty_like(amp)
        power[0] = amp[0] ** 2
        power[1:] = 2 * amp[1:] ** 2
        # the Nyquist bin of an even FFT is not doubled
        power[-1] = amp[-1] ** 2
        start = 0.0
    mags_db = 10 * np.log10(np.maximum(power, _DB_FLOOR**2))
    return Spectrum(bin_width, start, mags_db, window)


def _interpolated_peak(mags_db: np.ndarray, idx: int) -> tuple[float, float]:
    """Quadratic interpolation of a spectral peak: (bin offset, level dB)."""
    if idx <= 0 or idx >= len(mags_db) - 1:
        return 0.0, float(mags_db[idx])
    m0, m1, m2 = mags_db[idx - 1], mags_db[idx], mags_db[idx + 1]
    denom = m0 - 2 * m1 + m2
    if denom >= 0 or not np.isfinite(denom):
        return 0.0, float(m1)
    delta = 0.5 * (m0 - m2) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    level = m1 - 0.25 * (m0 - m2) * delta
    return delta, float(level)


def _peak_near(spectrum: Spectrum, freq_hz: float, span_bins: int = 2) -> tuple[float, float]:
    mags = spectrum.magnitudes_db
    center = spectrum.bin_of(freq_hz)
    lo = max(center - span_bins, 0)
    hi = min(center + span_bins + 1, len(mags))
    if lo >= hi:
        raise ValueError(f"{freq_hz} Hz lies outside the spectrum")
    idx = lo + int(np.argmax(mags[lo:hi]))
    delta, level = _interpolated_peak(mags, idx)
    freq = spectrum.start_hz + (idx + delta) * spectrum.bin_width_hz
    return freq, level


def measure_harmonics(spectrum: Spectrum, fundamental_hz: float, max_order: int = 5) -> HarmonicReport:
    """Locate the fundamental and its harmonics; report levels in dBc.

    Each component is peak-searched within +/-2 bins of the nominal integer
    multiple and refined by quadratic interpolation. Raises
    HarmonicDetectionError when the fundamental does not clear the noise
    floor (median bin level) by 10 dB.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    f_axis_max = spectrum.start_hz + spectrum.bin_width_hz * (len(spectrum.magnitudes_db) - 1)
    if not spectrum.start_hz <= fundamental_hz <= f_axis_max:
        raise ValueError("fundamental_hz lies outside the spectrum range")
    floor_db = float(np.median(spectrum.magnitudes_db))
    f0, level0 = _peak_near(spectrum, fundamental_hz)
    if level0 < floor_db + 10.0:
        raise HarmonicDetectionError(
            f"no fundamental near {fundamental_hz} Hz above the noise floor "
            f"({level0:.1f} dB vs floor {floor_db:.1f} dB)"
        )
    lines = []
    for order in range(2, max_order + 1):
        target = f0 * order
        if target > f_axis_max:
            break
        freq, level = _peak_near(spectrum, target)
        lines.append(HarmonicLine(order, freq, level - level0))
    thd = 100.0 * math.sqrt(sum(10 ** (h.level_dbc / 10) for h in lines))
    return HarmonicReport(f0, level0, tuple(lines), thd)


def intermod_image(band_low_hz: float, band_high_hz: float, lo_hz: float) -> tuple[float, float]:
    """Image band produced by the f - f_lo mixing product."""
    if band_low_hz >= band_high_hz:
        raise ValueError("band_low_hz must be below band_high_hz")
    if lo_hz >= band_low_hz:
        raise ValueError("lo_hz must be below band_low_hz")
    return band_low_hz - lo_hz, band_high_hz - lo_hz


def max_full_power_frequency(slew_rate_v_per_s: float, v_peak_v: float) -> float:
    """Highest frequency a slew-limited amplifier can swing at full amplitude:
    SR / (2*pi*Vp)."""
    if slew_rate_v_per_s <= 0 or v_peak_v <= 0:
        raise ValueError("slew_rate_v_per_s and v_peak_v must be positive")
    return slew_rate_v_per_s / (2 * math.pi * v_peak_v)


class FidelityResult(NamedTuple):
    delay_samples: int
    scale: float
    correlation: float
    snr_db: float


def audio_fidelity(reference: RealSignal, recovered: RealSignal) -> FidelityResult:
    """Score a recovered waveform against its reference.

    Signals are mean-removed, aligned at the best integer lag of the cross
    correlation, fitted with a least-squares scale, and the residual SNR is
    reported (capped at 120 dB). Zero-energy inputs yield the degenerate
    result (0, 0, 0, 0).
    """
    if reference.sample_rate_hz != recovered.sample_rate_hz:
        raise ValueError("reference and recovered sample rates differ")
    if len(reference) == 0 or len(recovered) == 0:
        raise ValueError("audio_fidelity requires non-empty signals")
    a = reference.samples - np.mean(reference.samples)
    b = recovered.samples - np.mean(recovered.samples)
    ea = float(np.dot(a, a))
    eb = float(np.dot(b, b))
    if ea == 0.0 or eb == 0.0:
        return FidelityResult(0, 0.0, 0.0, 0.0)
    xc = correlate(b, a, mode="full", method="fft")
    # align at the strongest in-phase peak; for tones this resolves the
    # half-period ambiguity toward the non-inverted alignment
    delay = int(np.argmax(xc)) - (len(a) - 1)
    if delay >= 0:
        a_al = a[: len(a) - delay if delay else len(a)]
        b_al = b[delay : delay + len(a_al)]
    else:
        b_al = b[: len(b) + delay]
        a_al = a[-delay : -delay + len(b_al)]
    n = min(len(a_al), len(b_al))
    if n == 0:
        return FidelityResult(delay, 0.0, 0.0, 0.0)
    a_al, b_al = a_al[:n], b_al[:n]
    denom = float(np.dot(a_al, a_al))
    if denom == 0.0:
        return FidelityResult(delay, 0.0, 0.0, 0.0)
    scale = float(np.dot(b_al, a_al)) / denom
    corr = float(
        np.dot(a_al, b_al) / math.sqrt(denom * float(np.dot(b_al, b_al)))
    )
    resid = b_al - scale * a_al
    p_signal = float(np.dot(scale * a_al, scale * a_al))
    p_resid = float(np.dot(resid, resid))
    if p_resid <= 0.0 or p_signal / p_resid > 10 ** (SNR_CAP_DB / 10):
        snr = SNR_CAP_DB
    else:
        snr = 10 * math.log10(p_signal / p_resid)
    return FidelityResult(delay, scale, corr, snr)
