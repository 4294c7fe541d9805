class ChShearError(Exception):
    """Base class for all package errors."""


class NonZeroMean(ChShearError, ValueError):
    pass


class MissingDiagnostics(ChShearError):
    pass


class WindowTooShort(ChShearError, ValueError):
    pass


class NotReached(ChShearError):
    pass


class BandOutOfRange(ChShearError, ValueError):
    pass


class NonPositiveConstant(ChShearError, ValueError):
    pass


class ConfigError(ChShearError):
    """Invalid run configuration; carries the section/key that failed."""

    def __init__(self, message, section=None, key=None):
        self.section = section
        self.key = key
        where = ""
        if section is not None:
            where = f"[{section}]" + (f" {key}" if key else "") + ": "
        super().__init__(where + message)
