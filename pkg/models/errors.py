# models/errors.py


class BzGateError(Exception):
    """
    Base class for every error raised by the models.
    """


class ConfigError(BzGateError, ValueError):
    """
    Invalid parameter combination or malformed config file.
    """


class NumericalBlowup(BzGateError):
    """
    The Euler integration produced a non-finite concentration.
    """


class DimensionMismatch(BzGateError, ValueError):
    pass


class ModeMismatch(BzGateError, ValueError):
    pass


class MaskFormatError(BzGateError):
    pass


class GenomeFormatError(BzGateError):
    """
    A serialized genome failed validation; `offset` is the byte offset of the
    first bad value (None when the header itself is unreadable).
    """
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)
        self.offset = offset


class RunFailedError(BzGateError):
    """
    A single search run failed; carries the run's seed so it can be reproduced.
    """
    def __init__(self, seed, cause):
        super().__init__(f"run with seed {seed} failed: {cause}")
        self.seed = seed
        self.cause = cause
