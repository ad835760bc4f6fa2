# -*- coding: utf-8 -*-


class EffectLabError(Exception):
    """Base class; ``exit_code`` is what the command line reports."""
    exit_code = 4
    kind = 'runtime'


class ConfigError(EffectLabError):
    exit_code = 2
    kind = 'config'


class DataValidationError(EffectLabError):
    exit_code = 3
    kind = 'data'


class ManifestError(DataValidationError):
    pass


class FrameCountMismatch(DataValidationError):
    pass


class DimensionMismatch(DataValidationError):
    pass


class FrameDecodeError(DataValidationError):
    pass


class ShapeMismatch(DataValidationError):
    pass


class NumericalError(EffectLabError):
    kind = 'numerical'


class CheckpointError(EffectLabError):
    kind = 'checkpoint'


class ExternalServiceError(EffectLabError):
    exit_code = 5
    kind = 'external'


class VlmAuthError(ExternalServiceError):
    pass


class VlmTimeout(ExternalServiceError):
    pass


class UnparseableReply(ExternalServiceError):
    pass
