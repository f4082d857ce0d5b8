"""Exception and warning types shared across the package."""


class NyquistError(ValueError):
    """A frequency parameter is at or beyond the Nyquist limit."""


class FileFormatError(ValueError):
    """An input file does not match the expected on-disk layout."""


class HarmonicDetectionError(RuntimeError):
    """No fundamental could be located above the spectrum noise floor."""


class SystemContractError(RuntimeError):
    """A system-under-test callback violated the probe contract."""


class ClippingWarning(UserWarning):
    """Samples were saturated while converting to a narrower range."""


class AmBandWarning(UserWarning):
    """Carrier frequency lies outside the 530-1700 kHz broadcast band."""


class AliasingWarning(UserWarning):
    """An operation produced content that folds across Nyquist."""


class BiasClampWarning(UserWarning):
    """Bias samples were clamped to the 0-12 V rails."""


class DetectorBandwidthWarning(UserWarning):
    """Envelope detector RC is too short relative to the carrier period."""
