"""Command-line surface for the AM-to-FM conversion chain.

Subcommands: convert, roundtrip, sweep, spectrum, tuning-curve, modulate,
demodulate. Report-style commands write CSV plus a rendered PNG figure next
to it. Exit codes: 0 ok, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analysis, filters, plots
from .config import ChainConfig, load_config
from .demodulation import OpAmpModel, demodulate_am, fm_demodulate
from .exceptions import FileFormatError, NyquistError
from .modulation import AmParams, FmParams, am_modulate, fm_modulate
from .signal_core import (
    ComplexSignal,
    RealSignal,
    load_iq,
    load_wav,
    save_iq,
    save_wav,
)
from .vco import BiasConditioner, condition_bias, tuning_curve, tuning_curve_to_csv, vco_synthesize

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # usage problems are user errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UserError(message)


class _UserError(Exception):
    pass


def _resample_linear(signal: RealSignal, new_fs: float) -> RealSignal:
    """Explicit chain rate-conversion point (linear interpolation).

    Adequate here because every conversion sits behind a filter that confines
    the signal far below both Nyquist rates.
    """
    if new_fs == signal.sample_rate_hz or len(signal) == 0:
        return RealSignal(new_fs, signal.samples.copy())
    duration = len(signal) / signal.sample_rate_hz
    n_new = int(round(duration * new_fs))
    t_old = np.arange(len(signal)) / signal.sample_rate_hz
    t_new = np.arange(n_new) / new_fs
    return RealSignal(new_fs, np.interp(t_new, t_old, signal.samples))


def _ac_couple(signal: RealSignal) -> RealSignal:
    if len(signal) == 0:
        return signal
    return RealSignal(signal.sample_rate_hz, signal.samples - np.mean(signal.samples))


def _normalize_peak(signal: RealSignal) -> RealSignal:
    peak = np.max(np.abs(signal.samples)) if len(signal) else 0.0
    if peak == 0.0:
        return signal
    return RealSignal(signal.sample_rate_hz, signal.samples / peak)


@dataclass
class ChainResult:
    message: RealSignal | None
    am: RealSignal
    demodulated: RealSignal
    preemphasized: RealSignal
    bias: RealSignal
    fm_iq: ComplexSignal


def _opamp_from(cfg: ChainConfig) -> OpAmpModel:
    return OpAmpModel(cfg.opamp_gbw_hz, cfg.opamp_slew_v_per_s, cfg.opamp_enabled)


def _load_am_input(path: Path, cfg: ChainConfig, kind: str):
    """Returns (message_or_None, am_signal)."""
    if kind == "auto":
        kind = {".wav": "audio", ".iq": "am-iq"}.get(path.suffix.lower(), "am-real")
    if kind == "audio":
        message = _normalize_peak(load_wav(path))
        if len(message) == 0:
            raise ValueError(f"{path}: empty input")
        msg_hi = _resample_linear(message, cfg.am_fs_hz)
        am = am_modulate(
            msg_hi, AmParams(cfg.am_carrier_hz, cfg.am_amplitude_v, cfg.am_depth)
        )
        return message, am
    if kind == "am-real":
        raw = np.fromfile(path, dtype="<f4").astype(np.float64)
        if raw.size == 0:
            raise ValueError(f"{path}: empty input")
        return None, RealSignal(cfg.am_fs_hz, raw)
    if kind == "am-iq":
        iq = load_iq(path, cfg.am_fs_hz, cfg.am_carrier_hz)
        if len(iq) == 0:
            raise ValueError(f"{path}: empty input")
        if cfg.am_carrier_hz >= 0.45 * cfg.am_fs_hz:
            raise NyquistError(
                "am stage: carrier too high to reconstruct a real AM waveform "
                "from the IQ capture at am_fs_hz"
            )
        t = np.arange(len(iq)) / cfg.am_fs_hz
        real_am = (iq.samples * np.exp(2j * np.pi * cfg.am_carrier_hz * t)).real
        return None, RealSignal(cfg.am_fs_hz, real_am)
    raise ValueError(f"unknown input kind {kind!r}")


def run_convert(cfg: ChainConfig, input_path, input_kind: str = "auto") -> ChainResult:
    """Execute the full chain: AM in, complex-baseband FM out."""
    cfg.validate()
    message, am = _load_am_input(Path(input_path), cfg, input_kind)
    demod = demodulate_am(
        am,
        _opamp_from(cfg),
        filters.design_single_pole_lowpass(cfg.demod_r_ohms, cfg.demod_c_f, cfg.am_fs_hz),
    )
    audio = _resample_linear(demod, cfg.audio_fs_hz)
    preemph_spec = filters.design_preemphasis(
        cfg.audio_fs_hz, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain
    )
    pre = filters.apply_filter(_ac_couple(audio), preemph_spec)
    bias = condition_bias(pre, BiasConditioner(cfg.bias_dc_v, cfg.bias_ac_attenuation))
    bias_iq = _resample_linear(bias, cfg.iq_fs_hz)
    fm_iq = vco_synthesize(cfg.build_vco(), bias_iq, "baseband")
    if cfg.output_scale != 1.0:
        fm_iq = ComplexSignal(
            fm_iq.sample_rate_hz, fm_iq.center_hz, fm_iq.samples * cfg.output_scale
        )
    return ChainResult(message, am, demod, pre, bias, fm_iq)


@dataclass
class RoundTripResult:
    chain: ChainResult
    recovered: RealSignal
    fidelity: analysis.FidelityResult
    thd_percent: float | None
    degenerate: bool


def run_roundtrip(cfg: ChainConfig, input_path) -> RoundTripResult:
    """Convert, then receive: discriminate, de-emphasize, score vs input."""
    chain = run_convert(cfg, input_path, input_kind="audio")
    disc = fm_demodulate(chain.fm_iq)
    audio = _resample_linear(disc, cfg.audio_fs_hz)
    deemph_spec = filters.design_deemphasis(
        cfg.audio_fs_hz, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain
    )
    recovered = filters.apply_filter(_ac_couple(audio), deemph_spec)
    message = chain.message
    if message.sample_rate_hz != recovered.sample_rate_hz:
        recovered = _resample_linear(recovered, message.sample_rate_hz)
    fidelity = analysis.audio_fidelity(message, recovered)
    degenerate = float(np.max(np.abs(message.samples), initial=0.0)) == 0.0 or fidelity.scale == 0.0
    thd = None
    if not degenerate:
        nfft = 1 << int(np.floor(np.log2(max(len(recovered), 64))))
        nfft = min(nfft, 1 << 16)
        if nfft >= 64 and len(recovered) >= nfft:
            spec = analysis.compute_spectrum(recovered, nfft, "hann")
            try:
                f0 = spec.peak_frequency_hz(min_hz=2 * spec.bin_width_hz)
                thd = analysis.measure_harmonics(spec, f0, max_order=5).thd_percent
            except (analysis.HarmonicDetectionError, ValueError):
                thd = None
    return RoundTripResult(chain, recovered, fidelity, thd, degenerate)


def _dump_stages(result: ChainResult, cfg: ChainConfig, out_path: Path) -> Path:
    stage_dir = out_path.with_name(out_path.stem + "_stages")
    stage_dir.mkdir(parents=True, exist_ok=True)
    rows = []

    def dump(name: str, sig: RealSignal):
        save_wav(sig, stage_dir / f"{name}.wav", "float32")
        rms = float(np.sqrt(np.mean(sig.samples**2))) if len(sig) else 0.0
        rows.append((name, sig.sample_rate_hz, len(sig), rms))

    if result.message is not None:
        dump("01_message", result.message)
    dump("02_am", result.am)
    dump("03_demodulated", result.demodulated)
    dump("04_preemphasized", result.preemphasized)
    dump("05_bias", result.bias)
    save_iq(result.fm_iq, stage_dir / "06_fm.iq")
    rows.append(
        (
            "06_fm",
            result.fm_iq.sample_rate_hz,
            len(result.fm_iq),
            float(np.sqrt(np.mean(np.abs(result.fm_iq.samples) ** 2))),
        )
    )
    with open(stage_dir / "stages.csv", "w") as fh:
        fh.write("stage,sample_rate_hz,n_samples,rms\n")
        for name, fs, n, rms in rows:
            fh.write(f"{name},{fs:.3f},{n},{rms:.6f}\n")
    return stage_dir


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_convert(args, cfg: ChainConfig) -> int:
    out = Path(args.output)
    result = run_convert(cfg, args.input, args.input_kind)
    save_iq(result.fm_iq, out)
    if args.dump_stages:
        stage_dir = _dump_stages(result, cfg, out)
        print(f"stage dumps written to {stage_dir}")
    print(
        f"wrote {out}: {len(result.fm_iq)} IQ samples at "
        f"{result.fm_iq.sample_rate_hz:.0f} Hz, center {result.fm_iq.center_hz / 1e6:.3f} MHz"
    )
    return EXIT_OK


def _cmd_roundtrip(args, cfg: ChainConfig) -> int:
    result = run_roundtrip(cfg, args.input)
    fid = result.fidelity
    print(f"delay_samples={fid.delay_samples}")
    print(f"scale={fid.scale:.6g}")
    print(f"correlation={fid.correlation:.6f}")
    print(f"snr_db={fid.snr_db:.2f}")
    print(f"thd_percent={'n/a' if result.thd_percent is None else f'{result.thd_percent:.4f}'}")
    print(f"degenerate={'true' if result.degenerate else 'false'}")
    if args.output:
        rec = result.recovered
        peak = float(np.max(np.abs(rec.samples), initial=0.0))
        if peak > 0:
            rec = RealSignal(rec.sample_rate_hz, 0.9 * rec.samples / peak)
        save_wav(rec, args.output, "float32")
        print(f"recovered audio written to {args.output}")
    return EXIT_OK


_SWEEP_DEFAULT_FS = {
    "preemphasis": 192e3,
    "deemphasis": 192e3,
    "cascade": 192e3,
    "output-filter": 192e3,
    "bias": 2e6,
}


def _sweep_system(target: str, cfg: ChainConfig, fs: float):
    if target == "preemphasis":
        spec = filters.design_preemphasis(fs, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain)
        return lambda s: filters.apply_filter(s, spec), cfg.preemph_tau1_s
    if target == "deemphasis":
        spec = filters.design_deemphasis(fs, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain)
        return lambda s: filters.apply_filter(s, spec), cfg.preemph_tau1_s
    if target == "cascade":
        pre = filters.design_preemphasis(fs, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain)
        de = filters.design_deemphasis(fs, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain)
        return lambda s: filters.apply_filter(filters.apply_filter(s, pre), de), cfg.preemph_tau1_s
    if target == "output-filter":
        spec = filters.design_single_pole_lowpass(cfg.demod_r_ohms, cfg.demod_c_f, fs)
        return lambda s: filters.apply_filter(s, spec), cfg.demod_r_ohms * cfg.demod_c_f
    if target == "bias":
        bias = BiasConditioner(cfg.bias_dc_v, cfg.bias_ac_attenuation)
        tau = bias.isolation_r_ohms * bias.varactor_load_c_f
        return lambda s: condition_bias(s, bias), tau
    raise ValueError(f"unknown sweep target {target!r}")


def _cmd_sweep(args, cfg: ChainConfig) -> int:
    fs = args.fs if args.fs else _SWEEP_DEFAULT_FS[args.target]
    system, tau = _sweep_system(args.target, cfg, fs)
    sweep = filters.fra_sweep(
        system, args.f_start, args.f_stop, args.ppd, args.amplitude, fs, time_constant_s=tau
    )
    out = Path(args.output)
    sweep.to_csv(out)
    print(f"wrote {out}: {len(sweep)} points, {args.f_start:g}-{args.f_stop:g} Hz")
    if args.target in ("preemphasis", "deemphasis"):
        marks = filters.measure_shelf_landmarks(sweep)
        print(
            f"turning points: {marks.f_low_hz:.1f} Hz and {marks.f_high_hz:.1f} Hz; "
            f"midband slope {marks.midband_slope_db_per_decade:+.2f} dB/decade"
        )
    if not args.no_figures:
        fig_path = out.with_suffix(".png")
        plots.save_sweep_figure(sweep, fig_path, title=f"{args.target} frequency response")
        print(f"figure written to {fig_path}")
    return EXIT_OK


def _cmd_spectrum(args, cfg: ChainConfig) -> int:
    path = Path(args.input)
    if path.suffix.lower() == ".iq":
        sig = load_iq(path, args.fs if args.fs else cfg.iq_fs_hz, 0.0)
    else:
        sig = load_wav(path)
    nfft = args.nfft
    if nfft is None and len(sig) >= 128:
        nfft = min(1 << int(np.floor(np.log2(len(sig)))), 1 << 16)
    spec = analysis.compute_spectrum(sig, nfft, args.window)
    out = Path(args.output)
    spec.to_csv(out)
    print(f"wrote {out}: {len(spec.magnitudes_db)} bins of {spec.bin_width_hz:.3f} Hz")
    report = None
    if args.harmonics is not None:
        report = analysis.measure_harmonics(spec, args.harmonics, args.max_order)
        print(report.to_text())
        report_path = out.with_name(out.stem + "_harmonics.csv")
        report.to_csv(report_path)
        print(f"harmonic report written to {report_path}")
    if not args.no_figures:
        fig_path = out.with_suffix(".png")
        plots.save_spectrum_figure(spec, fig_path, title=path.name, harmonics=report)
        print(f"figure written to {fig_path}")
    return EXIT_OK


def _cmd_tuning_curve(args, cfg: ChainConfig) -> int:
    curve = tuning_curve(cfg.build_vco(), args.v_start, args.v_stop, args.steps)
    out = Path(args.output)
    tuning_curve_to_csv(curve, out)
    print(
        f"wrote {out}: {len(curve)} points, "
        f"{curve[0, 1] / 1e6:.2f}-{curve[-1, 1] / 1e6:.2f} MHz"
    )
    if not args.no_figures:
        fig_path = out.with_suffix(".png")
        plots.save_tuning_curve_figure(curve, fig_path)
        print(f"figure written to {fig_path}")
    return EXIT_OK


def _cmd_modulate(args, cfg: ChainConfig) -> int:
    cfg.validate()
    message = _normalize_peak(load_wav(args.input))
    if len(message) == 0:
        raise ValueError(f"{args.input}: empty input")
    out = Path(args.output)
    if args.kind == "am":
        msg_hi = _resample_linear(message, cfg.am_fs_hz)
        am = am_modulate(msg_hi, AmParams(cfg.am_carrier_hz, cfg.am_amplitude_v, cfg.am_depth))
        if out.suffix.lower() == ".wav":
            save_wav(am, out, "float32")
        else:
            am.samples.astype("<f4").tofile(out)
        print(f"wrote {out}: AM at {cfg.am_carrier_hz / 1e3:.0f} kHz, fs {cfg.am_fs_hz:.0f} Hz")
    else:
        msg_iq = _resample_linear(message, cfg.iq_fs_hz)
        iq = fm_modulate(msg_iq, FmParams(0.0, cfg.fm_kf_hz_per_v))
        save_iq(iq, out)
        print(f"wrote {out}: FM IQ, kf {cfg.fm_kf_hz_per_v:.0f} Hz/V, fs {cfg.iq_fs_hz:.0f} Hz")
    return EXIT_OK


def _cmd_demodulate(args, cfg: ChainConfig) -> int:
    cfg.validate()
    path = Path(args.input)
    out = Path(args.output)
    if args.kind == "am":
        if path.suffix.lower() == ".wav":
            am = load_wav(path)
        else:
            _, am = _load_am_input(path, cfg, "auto")
        demod = demodulate_am(
            am,
            _opamp_from(cfg),
            filters.design_single_pole_lowpass(cfg.demod_r_ohms, cfg.demod_c_f, am.sample_rate_hz),
        )
        audio = _ac_couple(_resample_linear(demod, cfg.audio_fs_hz))
    else:
        iq = load_iq(path, args.fs if args.fs else cfg.iq_fs_hz, 0.0)
        disc = fm_demodulate(iq)
        audio = RealSignal(disc.sample_rate_hz, disc.samples / cfg.fm_kf_hz_per_v)
        audio = _ac_couple(_resample_linear(audio, cfg.audio_fs_hz))
        if args.deemphasis:
            spec = filters.design_deemphasis(
                cfg.audio_fs_hz, cfg.preemph_tau1_s, cfg.preemph_tau2_s, cfg.preemph_gain
            )
            audio = filters.apply_filter(audio, spec)
    save_wav(audio, out, "float32")
    print(f"wrote {out}: {len(audio)} samples at {audio.sample_rate_hz:.0f} Hz")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing

_CONFIG_FLAGS = {f.name: f.type for f in fields(ChainConfig)}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="flat key=value config file")
    parser.add_argument(
        "--no-figures", action="store_true", help="skip PNG rendering next to CSV output"
    )
    group = parser.add_argument_group("chain configuration overrides")
    for name, kind in _CONFIG_FLAGS.items():
        flag = "--" + name.replace("_", "-")
        if kind == "bool":
            group.add_argument(flag, dest=f"cfg_{name}", metavar="BOOL", default=None)
        else:
            group.add_argument(flag, dest=f"cfg_{name}", type=float, default=None)


def _config_from_args(args) -> ChainConfig:
    cfg = load_config(args.config) if args.config else ChainConfig()
    for name, kind in _CONFIG_FLAGS.items():
        value = getattr(args, f"cfg_{name}", None)
        if value is None:
            continue
        if kind == "bool":
            value = str(value).lower() in ("1", "true", "yes", "on")
        setattr(cfg, name, value)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="am2fm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="AM input to FM IQ output through the full chain")
    p.add_argument("input", help="audio .wav, real AM .raw/.f32, or AM .iq capture")
    p.add_argument("-o", "--output", required=True, help="output .iq path")
    p.add_argument(
        "--input-kind",
        choices=["auto", "audio", "am-real", "am-iq"],
        default="auto",
        help="how to interpret the input file (default: by extension)",
    )
    p.add_argument("--dump-stages", action="store_true", help="write every chain stage")
    _add_common(p)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("roundtrip", help="convert then receive; print a fidelity report")
    p.add_argument("input", help="audio .wav message")
    p.add_argument("-o", "--output", help="optional recovered-audio .wav path")
    _add_common(p)
    p.set_defaults(func=_cmd_roundtrip)

    p = sub.add_parser("sweep", help="swept-sine frequency response to CSV")
    p.add_argument("--target", required=True, choices=sorted(_SWEEP_DEFAULT_FS))
    p.add_argument("--from", dest="f_start", type=float, default=10.0, metavar="HZ")
    p.add_argument("--to", dest="f_stop", type=float, default=50e3, metavar="HZ")
    p.add_argument("--ppd", type=int, default=20, help="points per decade")
    p.add_argument("--amplitude", type=float, default=0.1, help="probe amplitude (V)")
    p.add_argument("--fs", type=float, default=None, help="probe sample rate (Hz)")
    p.add_argument("-o", "--output", required=True, help="output .csv path")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("spectrum", help="FFT spectrum of a .wav or .iq file to CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output .csv path")
    p.add_argument("--nfft", type=int, default=None)
    p.add_argument("--window", default="hann", choices=["rectangular", "hann", "hamming", "blackman"])
    p.add_argument("--fs", type=float, default=None, help="sample rate for headerless .iq input")
    p.add_argument("--harmonics", type=float, default=None, metavar="F0",
                   help="also report harmonics of this fundamental")
    p.add_argument("--max-order", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("tuning-curve", help="calibrated VCO frequency vs bias to CSV")
    p.add_argument("--from", dest="v_start", type=float, default=0.0, metavar="V")
    p.add_argument("--to", dest="v_stop", type=float, default=12.0, metavar="V")
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("-o", "--output", required=True, help="output .csv path")
    _add_common(p)
    p.set_defaults(func=_cmd_tuning_curve)

    p = sub.add_parser("modulate", help="modulate an audio message to AM or FM")
    p.add_argument("input", help="audio .wav message")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kind", choices=["am", "fm"], default="am")
    _add_common(p)
    p.set_defaults(func=_cmd_modulate)

    p = sub.add_parser("demodulate", help="demodulate an AM waveform or FM IQ capture")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output audio .wav")
    p.add_argument("--kind", choices=["am", "fm"], default="am")
    p.add_argument("--fs", type=float, default=None, help="sample rate for headerless .iq input")
    p.add_argument("--deemphasis", action="store_true", help="apply de-emphasis after FM demod")
    _add_common(p)
    p.set_defaults(func=_cmd_demodulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    cfg = None
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cfg = _config_from_args(args)
            code = args.func(args, cfg)
        if caught:
            print(f"warnings: {len(caught)}")
            for w in caught:
                print(f"  {w.category.__name__}: {w.message}")
        return code
    except (ValueError, FileFormatError, NyquistError, FileNotFoundError, OSError, _UserError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
