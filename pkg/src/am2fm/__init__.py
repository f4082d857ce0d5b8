"""Sample-level AM-to-FM converter bench.

Library + CLI modeling the full conversion chain: AM modulation, envelope
and product demodulation, pre-emphasis, varactor bias conditioning, a
voltage-controlled oscillator, FM synthesis/demodulation, and the
measurement suite used to characterize it all.
"""

from .analysis import (
    FidelityResult,
    HarmonicReport,
    Spectrum,
    audio_fidelity,
    compute_spectrum,
    intermod_image,
    max_full_power_frequency,
    measure_harmonics,
)
from .config import ChainConfig, load_config, save_config
from .demodulation import (
    EnvelopeDetectorConfig,
    OpAmpModel,
    demodulate_am,
    fm_demodulate,
    precision_full_wave_rectify,
    predicted_ripple,
    product_detect,
    simple_envelope_detect,
)
from .exceptions import (
    AliasingWarning,
    AmBandWarning,
    BiasClampWarning,
    ClippingWarning,
    DetectorBandwidthWarning,
    FileFormatError,
    HarmonicDetectionError,
    NyquistError,
    SystemContractError,
)
from .filters import (
    FilterSpec,
    FilterState,
    SweepResult,
    apply_filter,
    design_deemphasis,
    design_preemphasis,
    design_single_pole_lowpass,
    fra_sweep,
    measure_shelf_landmarks,
)
from .modulation import AmParams, FmParams, am_modulate, fm_modulate, mix
from .signal_core import (
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
from .vco import (
    BiasConditioner,
    TankCircuit,
    VaractorModel,
    VcoConfig,
    calibrate_soft_clip,
    calibrate_vco,
    condition_bias,
    emitter_follower_small_signal,
    tank_resonant_frequency,
    tuning_curve,
    varactor_capacitance,
    vco_frequency,
    vco_synthesize,
)

__version__ = "0.1.0"
