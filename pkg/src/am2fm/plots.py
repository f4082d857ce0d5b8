"""Matplotlib rendering for the CLI report paths.

Every figure is written next to its CSV; matplotlib is imported lazily so
library users never pay for it.
"""

from __future__ import annotations

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


_SAVE_KW = dict(dpi=130, metadata={"Software": "am2fm"})


def save_sweep_figure(sweep, path, title: str = "Frequency response") -> None:
    plt = _plt()
    fig, (ax_g, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(7, 5.5))
    ax_g.semilogx(sweep.frequencies_hz, sweep.gains_db, marker="o", ms=3)
    ax_g.set_ylabel("Gain (dB)")
    ax_g.grid(True, which="both", alpha=0.3)
    ax_g.set_title(title)
    ax_p.semilogx(sweep.frequencies_hz, sweep.phases_deg, marker="o", ms=3, color="tab:orange")
    ax_p.set_ylabel("Phase (deg)")
    ax_p.set_xlabel("Frequency (Hz)")
    ax_p.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_spectrum_figure(spectrum, path, title: str = "Spectrum", harmonics=None) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    f = spectrum.frequencies_hz
    scale, unit = (1e6, "MHz") if f[-1] >= 5e6 else ((1e3, "kHz") if f[-1] >= 5e3 else (1.0, "Hz"))
    ax.plot(f / scale, spectrum.magnitudes_db, lw=0.8)
    if harmonics is not None:
        ax.plot(
            harmonics.fundamental_hz / scale,
            harmonics.fundamental_db,
            "v",
            color="tab:red",
            label="fundamental",
        )
        for h in harmonics.harmonics:
            ax.plot(h.frequency_hz / scale, harmonics.fundamental_db + h.level_dbc, "v", color="tab:orange")
        ax.legend(loc="upper right")
    floor = float(np.median(spectrum.magnitudes_db))
    ax.set_ylim(bottom=max(floor - 20, float(np.min(spectrum.magnitudes_db)) - 5))
    ax.set_xlabel(f"Frequency ({unit})")
    ax.set_ylabel("Magnitude (dB re 1 V RMS)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_tuning_curve_figure(curve, path, title: str = "VCO tuning curve") -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(curve[:, 0], curve[:, 1] / 1e6, marker="o", ms=4)
    ax.set_xlabel("Bias (V)")
    ax.set_ylabel("Frequency (MHz)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
