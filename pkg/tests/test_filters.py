import numpy as np
import pytest

from am2fm.exceptions import NyquistError, SystemContractError
from am2fm.filters import (
    FilterState,
    SweepResult,
    apply_filter,
    design_deemphasis,
    design_preemphasis,
    design_single_pole_lowpass,
    fra_sweep,
    measure_shelf_landmarks,
)
from am2fm.signal_core import RealSignal


def _minus_3db_frequency(spec, f_lo, f_hi):
    f = np.linspace(f_lo, f_hi, 20001)
    mags = np.abs(spec.response_at(f))
    return f[np.argmin(np.abs(mags - 1 / np.sqrt(2)))]


def test_lowpass_cutoff_723hz():
    spec = design_single_pole_lowpass(10e3, 22e-9, 48000)
    measured = _minus_3db_frequency(spec, 500, 1000)
    assert measured == pytest.approx(723.0, rel=0.01)


def test_lowpass_dc_gain_unity():
    spec = design_single_pole_lowpass(10e3, 22e-9, 48000)
    assert abs(spec.response_at(0.0)) == pytest.approx(1.0, abs=1e-12)


def test_lowpass_decade_rolloff():
    spec = design_single_pole_lowpass(10e3, 22e-9, 1e6)
    cutoff = 1 / (2 * np.pi * 10e3 * 22e-9)
    gain = 20 * np.log10(abs(spec.response_at(10 * cutoff)))
    assert gain == pytest.approx(-20.0, abs=0.5)


def test_lowpass_nyquist_error():
    with pytest.raises(NyquistError):
        design_single_pole_lowpass(10e3, 22e-9, 1000.0)
    with pytest.raises(ValueError):
        design_single_pole_lowpass(-1.0, 22e-9, 48000)


def test_preemphasis_gains_and_crossovers():
    fs = 192000
    spec = design_preemphasis(fs)
    dc_gain = abs(spec.response_at(0.0))
    assert dc_gain == pytest.approx(0.45, rel=1e-6)
    hf_gain = abs(spec.response_at(fs / 2 * 0.9999))
    assert 20 * np.log10(hf_gain) == pytest.approx(20 * np.log10(3.0), abs=0.5)
    # +3 dB over each plateau marks the crossovers
    f = np.geomspace(20, 50e3, 3000)
    gains = 20 * np.log10(np.abs(spec.response_at(f)))
    low_target = 20 * np.log10(0.45) + 3.0103
    high_target = 20 * np.log10(3.0) - 3.0103
    f_low = f[np.argmin(np.abs(gains - low_target))]
    f_high = f[np.argmin(np.abs(gains - high_target))]
    assert f_low == pytest.approx(318.0, rel=0.10)
    assert f_high == pytest.approx(2100.0, rel=0.10)


def test_preemphasis_midband_slope_asymptote():
    # the shelf rise between turning points follows the +20 dB/decade
    # first-order asymptote
    fs = 192000
    spec = design_preemphasis(fs)
    f = np.geomspace(10, 50e3, 200)
    gains = 20 * np.log10(np.abs(spec.response_at(f)))
    sweep = SweepResult(f, gains, np.zeros_like(f))
    marks = measure_shelf_landmarks(sweep)
    assert marks.midband_slope_db_per_decade == pytest.approx(20.0, abs=2.0)


def test_preemphasis_tau_ordering():
    with pytest.raises(ValueError):
        design_preemphasis(48000, tau1_s=75e-6, tau2_s=500e-6)


def test_deemphasis_cascade_allpass():
    fs = 192000
    pre = design_preemphasis(fs)
    de = design_deemphasis(fs)
    f = np.geomspace(20, 10e3, 500)
    cascade = pre.response_at(f) * de.response_at(f)
    assert np.max(np.abs(20 * np.log10(np.abs(cascade)))) < 0.1
    mid = (f > 300) & (f < 3000)
    assert np.max(np.abs(np.degrees(np.angle(cascade[mid])))) < 1.0


def test_deemphasis_dc_gain():
    de = design_deemphasis(192000)
    assert abs(de.response_at(0.0)) == pytest.approx(1 / 0.45, rel=1e-6)
    assert de.is_stable


def test_designed_filters_are_stable():
    rng = np.random.default_rng(21)
    for _ in range(25):
        fs = rng.uniform(20e3, 2e6)
        r = rng.uniform(100, 1e5)
        c = rng.uniform(1e-10, 1e-6)
        if 1 / (2 * np.pi * r * c) < fs / 2:
            assert design_single_pole_lowpass(r, c, fs).is_stable
        tau2 = rng.uniform(10e-6, 200e-6)
        tau1 = tau2 * rng.uniform(2, 20)
        if 1 / (2 * np.pi * tau2) < fs / 2:
            assert design_preemphasis(fs, tau1, tau2).is_stable
            assert design_deemphasis(fs, tau1, tau2).is_stable


def test_apply_filter_impulse_decay():
    fs = 48000
    spec = design_single_pole_lowpass(10e3, 22e-9, fs)
    x = np.zeros(64)
    x[0] = 1.0
    y = apply_filter(RealSignal(fs, x), spec).samples
    pole = -spec.a[1]
    ratios = y[3:20] / y[2:19]
    assert np.allclose(ratios, pole, rtol=1e-9)


def test_apply_filter_dc_gain():
    fs = 48000
    spec = design_single_pole_lowpass(10e3, 22e-9, fs)
    y = apply_filter(RealSignal(fs, np.ones(20000)), spec).samples
    assert y[-1] == pytest.approx(1.0, abs=1e-6)


def test_apply_filter_streaming_bit_identical():
    rng = np.random.default_rng(17)
    fs = 48000
    x = rng.standard_normal(10000)
    for spec in (design_single_pole_lowpass(10e3, 22e-9, fs), design_preemphasis(fs)):
        whole = apply_filter(RealSignal(fs, x), spec).samples
        state = FilterState.zeros(spec)
        first = apply_filter(RealSignal(fs, x[:3777]), spec, state).samples
        second = apply_filter(RealSignal(fs, x[3777:]), spec, state).samples
        assert np.array_equal(np.concatenate([first, second]), whole)


def test_apply_filter_rejects_fs_mismatch_and_nan():
    spec = design_single_pole_lowpass(10e3, 22e-9, 48000)
    with pytest.raises(ValueError, match="designed at"):
        apply_filter(RealSignal(44100, np.zeros(16)), spec)
    bad = RealSignal(48000, np.zeros(16))
    bad.samples[5] = np.nan  # bypasses construction check on purpose
    with pytest.raises(ValueError, match="index 5"):
        apply_filter(bad, spec)


def test_fra_identity_system():
    sweep = fra_sweep(lambda s: s, 100, 10e3, 5, 1.0, 48000)
    assert np.allclose(sweep.gains_db, 0.0, atol=1e-9)
    assert np.allclose(sweep.phases_deg, 0.0, atol=1e-9)


def test_fra_matches_analytic_single_pole():
    fs = 48000
    spec = design_single_pole_lowpass(10e3, 22e-9, fs)
    sweep = fra_sweep(
        lambda s: apply_filter(s, spec), 50, fs / 10, 10, 1.0, fs,
        time_constant_s=10e3 * 22e-9,
    )
    analytic = spec.response_at(sweep.frequencies_hz)
    assert np.max(np.abs(sweep.gains_db - 20 * np.log10(np.abs(analytic)))) < 0.2
    assert np.max(np.abs(sweep.phases_deg - np.degrees(np.angle(analytic)))) < 2.0


def test_fra_preemphasis_turning_points():
    fs = 192000
    spec = design_preemphasis(fs)
    sweep = fra_sweep(
        lambda s: apply_filter(s, spec), 10, 50e3, 12, 0.1, fs, time_constant_s=500e-6
    )
    marks = measure_shelf_landmarks(sweep)
    # measured hardware put the landmarks in the 300 Hz - 2.5 kHz region
    assert marks.f_low_hz == pytest.approx(318.0, rel=0.10)
    assert marks.f_high_hz == pytest.approx(2100.0, rel=0.10)


def test_fra_contract_error():
    def broken(sig):
        return RealSignal(sig.sample_rate_hz, sig.samples[:-1])

    with pytest.raises(SystemContractError):
        fra_sweep(broken, 100, 1000, 3, 1.0, 48000)


def test_fra_argument_errors():
    with pytest.raises(ValueError):
        fra_sweep(lambda s: s, 1000, 100, 5, 1.0, 48000)
    with pytest.raises(NyquistError):
        fra_sweep(lambda s: s, 100, 30000, 5, 1.0, 48000)


def test_sweep_result_csv(tmp_path):
    sweep = SweepResult([10.0, 100.0], [0.0, -3.0], [0.0, -45.0])
    path = tmp_path / "sweep.csv"
    sweep.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "freq_hz,gain_db,phase_deg"
    assert len(lines) == 3
    assert lines[1].startswith("10.000000,0.000000,")


def test_sweep_result_requires_increasing_frequencies():
    with pytest.raises(ValueError):
        SweepResult([100.0, 100.0], [0.0, 0.0], [0.0, 0.0])
