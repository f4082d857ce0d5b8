import numpy as np
import pytest

from am2fm.analysis import compute_spectrum
from am2fm.exceptions import ClippingWarning, FileFormatError, NyquistError
from am2fm.signal_core import (
    ComplexSignal,
    RealSignal,
    ToneSpec,
    frequency_shift,
    generate_tone,
    load_iq,
    load_wav,
    save_iq,
    save_wav,
)


def test_tone_quarter_period():
    sig = generate_tone(ToneSpec(1000.0, 1.0), 1e-3, 1e6)
    assert len(sig) == 1000
    assert sig.samples[0] == 1.0
    assert abs(sig.samples[250]) < 1e-12


def test_tone_dc_case():
    sig = generate_tone(ToneSpec(0.0, 0.0, dc_offset_v=0.5), 0.01, 48000)
    assert np.all(sig.samples == 0.5)


def test_tone_spectrum_peak_at_800khz():
    sig = generate_tone(ToneSpec(800e3, 1.0), 0.01, 10e6)
    spec = compute_spectrum(sig, 65536, "hann")
    assert abs(spec.peak_frequency_hz(min_hz=1000.0) - 800e3) <= spec.bin_width_hz


def test_tone_argument_errors():
    with pytest.raises(NyquistError):
        generate_tone(ToneSpec(30000.0, 1.0), 0.01, 48000)
    with pytest.raises(ValueError):
        generate_tone(ToneSpec(100.0, 1.0), 0.0, 48000)
    with pytest.raises(ValueError):
        generate_tone(ToneSpec(100.0, 1.0), 0.1, -48000)
    with pytest.raises(ValueError):
        ToneSpec(-1.0, 1.0)


def test_tone_sample_count_property():
    rng = np.random.default_rng(7)
    for _ in range(20):
        fs = rng.uniform(8e3, 1e6)
        duration = rng.uniform(1e-4, 0.05)
        sig = generate_tone(ToneSpec(fs / 100, 0.5), duration, fs)
        assert len(sig) == int(round(duration * fs))


def test_signal_rejects_nonfinite():
    with pytest.raises(ValueError, match="sample 2"):
        RealSignal(48000, np.array([0.0, 1.0, np.nan]))
    with pytest.raises(ValueError):
        ComplexSignal(48000, 0.0, np.array([1.0, np.inf * 1j]))
    with pytest.raises(ValueError):
        RealSignal(0.0, np.zeros(4))


def test_wav_float_roundtrip_exact(tmp_path):
    path = tmp_path / "tone.wav"
    sig = generate_tone(ToneSpec(1000.0, 0.7), 0.02, 48000)
    float32_exact = RealSignal(48000, sig.samples.astype(np.float32))
    save_wav(float32_exact, path, "float32")
    back = load_wav(path)
    assert back.sample_rate_hz == 48000
    assert np.array_equal(back.samples, float32_exact.samples)


def test_wav_int16_roundtrip_within_lsb(tmp_path):
    path = tmp_path / "tone16.wav"
    sig = generate_tone(ToneSpec(440.0, 0.9), 0.05, 44100)
    save_wav(sig, path, "int16")
    back = load_wav(path)
    assert np.max(np.abs(back.samples - sig.samples)) <= 1.0 / 32767


def test_wav_int16_clipping_saturates(tmp_path):
    path = tmp_path / "hot.wav"
    sig = generate_tone(ToneSpec(440.0, 2.0), 0.01, 44100)
    with pytest.warns(ClippingWarning):
        save_wav(sig, path, "int16")
    back = load_wav(path)
    assert np.max(back.samples) <= 1.0 + 1e-9
    assert np.min(back.samples) >= -32768 / 32767 - 1e-9


def test_wav_rejects_stereo(tmp_path):
    from scipy.io import wavfile

    path = tmp_path / "stereo.wav"
    wavfile.write(path, 44100, np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(FileFormatError, match="mono"):
        load_wav(path)


def test_wav_silence(tmp_path):
    path = tmp_path / "silence.wav"
    save_wav(RealSignal(44100, np.zeros(4410)), path, "int16")
    back = load_wav(path)
    assert back.sample_rate_hz == 44100
    assert np.all(back.samples == 0.0)


def test_iq_roundtrip_exact(tmp_path):
    path = tmp_path / "capture.iq"
    rng = np.random.default_rng(3)
    raw = rng.standard_normal(512).astype(np.float32).astype(np.float64)
    sig = ComplexSignal(1e6, 100e6, raw[0::2] + 1j * raw[1::2])
    save_iq(sig, path)
    back = load_iq(path, 1e6, 100e6)
    assert back.center_hz == 100e6
    assert np.array_equal(back.samples, sig.samples)


def test_iq_constant_stream(tmp_path):
    path = tmp_path / "ones.iq"
    sig = ComplexSignal(1e6, 0.0, np.ones(64, dtype=np.complex128))
    save_iq(sig, path)
    back = load_iq(path, 1e6, 0.0)
    assert np.array_equal(back.samples, sig.samples)


def test_iq_32_bytes_is_4_samples(tmp_path):
    path = tmp_path / "four.iq"
    np.zeros(8, dtype="<f4").tofile(path)
    assert path.stat().st_size == 32
    assert len(load_iq(path, 1e6, 0.0)) == 4


def test_iq_truncated_file(tmp_path):
    path = tmp_path / "bad.iq"
    np.zeros(7, dtype="<f4").tofile(path)
    with pytest.raises(FileFormatError, match="truncated"):
        load_iq(path, 1e6, 0.0)


def test_iq_tone_spectrum_peak(tmp_path):
    fs = 1e6
    n = 65536
    t = np.arange(n) / fs
    tone = ComplexSignal(fs, 0.0, np.exp(2j * np.pi * 100e3 * t))
    path = tmp_path / "tone.iq"
    save_iq(tone, path)
    back = load_iq(path, fs, 0.0)
    spec = compute_spectrum(back, 65536, "hann")
    assert abs(spec.peak_frequency_hz() - 100e3) <= spec.bin_width_hz


def test_frequency_shift_zero_is_identity():
    fs = 1e6
    t = np.arange(1000) / fs
    sig = ComplexSignal(fs, 0.0, np.exp(2j * np.pi * 10e3 * t))
    out = frequency_shift(sig, 0.0)
    assert np.array_equal(out.samples, sig.samples)
    assert out.center_hz == 0.0


def test_frequency_shift_tone_to_dc():
    fs = 1e6
    t = np.arange(4096) / fs
    sig = ComplexSignal(fs, 0.0, np.exp(2j * np.pi * 10e3 * t))
    out = frequency_shift(sig, -10e3)
    assert np.max(np.abs(out.samples - 1.0)) < 1e-9
    assert out.center_hz == -10e3


def test_frequency_shift_moves_peak():
    fs = 1e6
    t = np.arange(65536) / fs
    sig = ComplexSignal(fs, 0.0, np.exp(2j * np.pi * 5e3 * t))
    out = frequency_shift(sig, 20e3)
    spec = compute_spectrum(out, 65536, "hann")
    assert abs(spec.peak_frequency_hz() - 25e3) <= spec.bin_width_hz


def test_frequency_shift_preserves_energy():
    rng = np.random.default_rng(11)
    fs = 1e6
    for shift in (1.0, 1234.5, -200e3, 499e3):
        x = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
        sig = ComplexSignal(fs, 0.0, x)
        out = frequency_shift(sig, shift)
        e_in = np.sum(np.abs(sig.samples) ** 2)
        e_out = np.sum(np.abs(out.samples) ** 2)
        assert abs(e_out - e_in) / e_in < 1e-9


def test_frequency_shift_nyquist_error():
    sig = ComplexSignal(1e6, 0.0, np.ones(16))
    with pytest.raises(NyquistError):
        frequency_shift(sig, 500e3)
