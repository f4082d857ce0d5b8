"""Chain configuration: flat key=value file with CLI-flag overrides.

The defaults reproduce the canonical bench trial: 1 MHz carrier, 80% depth,
2.5 V carrier amplitude (5 Vpp), with a 48 kHz audio leg and 1 MHz IQ output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .vco import BiasConditioner, VcoConfig, calibrate_vco


@dataclass
class ChainConfig:
    am_carrier_hz: float = 1e6
    am_depth: float = 0.8
    am_amplitude_v: float = 2.5
    am_fs_hz: float = 10e6
    audio_fs_hz: float = 48e3
    iq_fs_hz: float = 1e6
    opamp_enabled: bool = True
    opamp_gbw_hz: float = 15e6
    opamp_slew_v_per_s: float = 70e6
    demod_r_ohms: float = 10e3
    demod_c_f: float = 22e-9
    preemph_tau1_s: float = 500e-6
    preemph_tau2_s: float = 75e-6
    preemph_gain: float = 3.0
    bias_dc_v: float = 3.0
    bias_ac_attenuation: float = 0.01
    vco_inductance_h: float = 50e-9
    vco_c_zero_bias_f: float = 100e-12
    vco_f_low_hz: float = 66e6
    vco_f_high_hz: float = 102e6
    vco_soft_clip: float = 0.0
    vco_jitter_std_hz: float = 0.0
    fm_kf_hz_per_v: float = 75e3
    output_scale: float = 1.0

    def validate(self) -> None:
        """Check every stage's frequency plan, naming the offending stage."""
        problems = []
        if self.am_fs_hz <= 0 or self.audio_fs_hz <= 0 or self.iq_fs_hz <= 0:
            problems.append("config: sample rates must be positive")
        else:
            if self.am_carrier_hz >= self.am_fs_hz / 2:
                problems.append(
                    f"am stage: carrier {self.am_carrier_hz:.0f} Hz is not below "
                    f"Nyquist ({self.am_fs_hz / 2:.0f} Hz)"
                )
            demod_cutoff = 1.0 / (2 * math.pi * self.demod_r_ohms * self.demod_c_f)
            if demod_cutoff >= self.am_fs_hz / 2:
                problems.append(
                    f"demod stage: output-filter cutoff {demod_cutoff:.0f} Hz is not "
                    f"below Nyquist ({self.am_fs_hz / 2:.0f} Hz)"
                )
            shelf_pole = 1.0 / (2 * math.pi * self.preemph_tau2_s)
            if shelf_pole >= self.audio_fs_hz / 2:
                problems.append(
                    f"audio stage: pre-emphasis pole {shelf_pole:.0f} Hz is not below "
                    f"Nyquist ({self.audio_fs_hz / 2:.0f} Hz)"
                )
            if self.fm_kf_hz_per_v >= self.iq_fs_hz / 2:
                problems.append(
                    f"iq stage: FM sensitivity {self.fm_kf_hz_per_v:.0f} Hz/V is not "
                    f"below Nyquist ({self.iq_fs_hz / 2:.0f} Hz)"
                )
        if not 0.0 <= self.am_depth <= 1.0:
            problems.append("am stage: modulation depth must lie in [0, 1]")
        if self.am_amplitude_v <= 0:
            problems.append("am stage: carrier amplitude must be positive")
        if not self.preemph_tau1_s > self.preemph_tau2_s > 0:
            problems.append("audio stage: need preemph_tau1_s > preemph_tau2_s > 0")
        if not 0.0 <= self.bias_dc_v <= 12.0:
            problems.append("bias stage: bias_dc_v must lie in [0, 12] V")
        if not 0.0 <= self.bias_ac_attenuation <= 1.0:
            problems.append("bias stage: bias_ac_attenuation must lie in [0, 1]")
        if not 0 < self.vco_f_low_hz < self.vco_f_high_hz:
            problems.append("vco stage: need 0 < vco_f_low_hz < vco_f_high_hz")
        if self.output_scale <= 0:
            problems.append("output stage: output_scale must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    def build_vco(self) -> VcoConfig:
        return calibrate_vco(
            f_low_hz=self.vco_f_low_hz,
            f_high_hz=self.vco_f_high_hz,
            c_zero_bias_f=self.vco_c_zero_bias_f,
            inductance_h=self.vco_inductance_h,
            bias=BiasConditioner(self.bias_dc_v, self.bias_ac_attenuation),
            nonlinearity=self.vco_soft_clip,
            center_jitter_std_hz=self.vco_jitter_std_hz,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(ChainConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {key}: cannot parse {raw!r} as bool")
    return float(raw)


def load_config(path) -> ChainConfig:
    """Parse a flat key=value config file; '#' starts a comment."""
    cfg = ChainConfig()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line.strip()!r}")
            key, raw = stripped.split("=", 1)
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            setattr(cfg, key, _parse_value(key, raw))
    return cfg


def save_config(cfg: ChainConfig, path) -> None:
    with open(path, "w") as fh:
        for f in fields(ChainConfig):
            fh.write(f"{f.name}={getattr(cfg, f.name)}\n")
