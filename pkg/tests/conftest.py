import numpy as np
import pytest

from am2fm.signal_core import RealSignal, ToneSpec, generate_tone, save_wav


def single_bin_amplitude(samples: np.ndarray, freq_hz: float, fs: float, skip: int = 0) -> float:
    """Amplitude of one frequency component by complex correlation."""
    x = np.asarray(samples)[skip:]
    x = x - np.mean(x)
    n = np.arange(len(x))
    return 2.0 * abs(np.sum(x * np.exp(-2j * np.pi * freq_hz * n / fs)) / len(x))


def db(ratio: float) -> float:
    return 20.0 * np.log10(ratio)


@pytest.fixture
def tone_wav(tmp_path):
    """A 1 kHz, 0.8 V, 0.35 s test tone on disk at 48 kHz."""
    path = tmp_path / "tone1k.wav"
    save_wav(generate_tone(ToneSpec(1000.0, 0.8), 0.35, 48000), path, "float32")
    return path


def resample_linear(signal: RealSignal, new_fs: float) -> RealSignal:
    t_old = np.arange(len(signal)) / signal.sample_rate_hz
    n_new = int(round(len(signal) / signal.sample_rate_hz * new_fs))
    t_new = np.arange(n_new) / new_fs
    return RealSignal(new_fs, np.interp(t_new, t_old, signal.samples))
