import numpy as np
import pytest
from scipy.signal import hilbert

from am2fm.analysis import compute_spectrum
from am2fm.demodulation import fm_demodulate
from am2fm.exceptions import AliasingWarning, AmBandWarning, NyquistError
from am2fm.modulation import AmParams, FmParams, am_modulate, fm_modulate, mix
from am2fm.signal_core import RealSignal, ToneSpec, generate_tone

from conftest import single_bin_amplitude


def _envelope(signal):
    env = np.abs(hilbert(signal.samples))
    trim = len(env) // 20
    return env[trim:-trim]


def test_am_envelope_bounds_075():
    fs = 10e6
    msg = generate_tone(ToneSpec(1000.0, 1.0), 5e-3, fs)
    am = am_modulate(msg, AmParams(800e3, 1.0, 0.75))
    env = _envelope(am)
    assert env.min() == pytest.approx(0.25, rel=0.02)
    assert env.max() == pytest.approx(1.75, rel=0.02)


def test_am_zero_depth_is_pure_carrier():
    fs = 10e6
    msg = generate_tone(ToneSpec(1000.0, 1.0), 2e-3, fs)
    am = am_modulate(msg, AmParams(800e3, 1.0, 0.0))
    carrier = generate_tone(ToneSpec(800e3, 1.0), 2e-3, fs)
    assert np.max(np.abs(am.samples - carrier.samples)) < 1e-12


def test_am_full_depth_envelope_touches_zero():
    fs = 10e6
    msg = generate_tone(ToneSpec(1000.0, 1.0), 5e-3, fs)
    am = am_modulate(msg, AmParams(1e6, 1.0, 1.0))
    env = _envelope(am)
    assert env.min() < 0.02
    assert env.max() == pytest.approx(2.0, rel=0.02)


def test_am_band_warning_rules():
    with pytest.warns(AmBandWarning):
        AmParams(300e3, 1.0, 0.5)
    with pytest.warns(AmBandWarning):
        AmParams(2.5e6, 1.0, 0.5)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        AmParams(1e6, 1.0, 0.5)


def test_am_validation_errors():
    fs = 10e6
    msg = generate_tone(ToneSpec(1000.0, 1.0), 1e-3, fs)
    with pytest.raises(ValueError):
        AmParams(1e6, 1.0, 1.5)
    with pytest.warns(AmBandWarning):
        too_high = AmParams(6e6, 1.0, 0.5)
    with pytest.raises(NyquistError):
        am_modulate(msg, too_high)
    big = RealSignal(fs, 1.5 * msg.samples)
    with pytest.raises(ValueError, match="normalize"):
        am_modulate(big, AmParams(1e6, 1.0, 0.5))


def test_fm_zero_message_is_dc():
    fs = 48000
    msg = RealSignal(fs, np.zeros(1000))
    iq = fm_modulate(msg, FmParams(100e6, 10e3))
    assert iq.center_hz == 100e6
    assert np.all(iq.samples == 1.0 + 0.0j)


def test_fm_constant_message_instantaneous_frequency():
    fs = 250e3
    msg = RealSignal(fs, np.ones(int(0.05 * fs)))
    iq = fm_modulate(msg, FmParams(0.0, 10e3))
    rec = fm_demodulate(iq)
    assert np.mean(rec.samples[10:]) == pytest.approx(10e3, rel=0.01)


def test_fm_constant_modulus():
    rng = np.random.default_rng(5)
    fs = 100e3
    msg = RealSignal(fs, rng.uniform(-1, 1, 20000))
    iq = fm_modulate(msg, FmParams(0.0, 5e3))
    assert np.max(np.abs(np.abs(iq.samples) - 1.0)) < 1e-9


def test_fm_bessel_line_symmetry():
    # cosine message: sideband magnitudes at center +/- n*fm must match
    fs = 65536.0
    msg = generate_tone(ToneSpec(100.0, 1.0), 1.0, fs)
    iq = fm_modulate(msg, FmParams(0.0, 400.0))
    spec = compute_spectrum(iq, 65536, "rectangular")
    center = spec.bin_of(0.0)
    step = int(round(100.0 / spec.bin_width_hz))
    for n in range(1, 6):
        upper = spec.magnitudes_db[center + n * step]
        lower = spec.magnitudes_db[center - n * step]
        assert abs(upper - lower) < 0.5


def test_fm_trapezoidal_integration_close():
    fs = 100e3
    msg = generate_tone(ToneSpec(1000.0, 1.0), 0.05, fs)
    rect = fm_modulate(msg, FmParams(0.0, 5e3), "rectangular")
    trap = fm_modulate(msg, FmParams(0.0, 5e3), "trapezoidal")
    # phase difference is bounded by one sample of peak deviation
    dphi = np.angle(rect.samples * np.conj(trap.samples))
    assert np.max(np.abs(dphi)) <= 2 * np.pi * 5e3 / fs + 1e-9


def test_fm_deviation_nyquist_error():
    fs = 10e3
    msg = RealSignal(fs, np.ones(100))
    with pytest.raises(NyquistError):
        fm_modulate(msg, FmParams(0.0, 6e3))
    with pytest.raises(ValueError):
        FmParams(0.0, -1.0)


def test_mix_if_pair_at_455khz():
    fs = 10e6
    sig = generate_tone(ToneSpec(1e6, 1.0), 0.01, fs)
    out = mix(sig, 545e3)
    assert single_bin_amplitude(out.samples, 455e3, fs) == pytest.approx(0.5, rel=0.01)
    assert single_bin_amplitude(out.samples, 1.545e6, fs) == pytest.approx(0.5, rel=0.01)
    spec = compute_spectrum(out, 65536, "hann")
    assert abs(spec.peak_frequency_hz(max_hz=1e6) - 455e3) <= spec.bin_width_hz
    assert abs(spec.peak_frequency_hz(min_hz=1.1e6) - 1.545e6) <= spec.bin_width_hz


def test_mix_zero_lo_identity():
    fs = 1e6
    sig = generate_tone(ToneSpec(10e3, 1.0), 0.01, fs)
    out = mix(sig, 0.0)
    assert np.array_equal(out.samples, sig.samples)


def test_mix_to_dc_and_double():
    fs = 10e6
    sig = generate_tone(ToneSpec(600e3, 1.0), 0.01, fs)
    out = mix(sig, 600e3)
    dc = np.mean(out.samples)
    assert dc == pytest.approx(0.5, rel=0.01)
    assert single_bin_amplitude(out.samples, 1.2e6, fs) == pytest.approx(0.5, rel=0.01)


def test_mix_linearity():
    fs = 1e6
    sig = generate_tone(ToneSpec(50e3, 1.0), 0.005, fs)
    scaled = RealSignal(fs, 3.0 * sig.samples)
    a = mix(scaled, 100e3).samples
    b = 3.0 * mix(sig, 100e3).samples
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(b))


def test_mix_aliasing_warning():
    fs = 1e6
    sig = generate_tone(ToneSpec(400e3, 1.0), 0.005, fs)
    with pytest.warns(AliasingWarning):
        mix(sig, 200e3)
    with pytest.raises(NyquistError):
        mix(sig, 600e3)
