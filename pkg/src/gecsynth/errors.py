"""Exception hierarchy. Everything the CLI maps to exit code 1 derives from GecError."""


class GecError(Exception):
    pass


class ControlCharacterError(GecError, ValueError):
    pass


class SampleTooLarge(GecError, ValueError):
    pass


class CorpusLoadError(GecError):
    pass


class FormatError(GecError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OverlapError(GecError, ValueError):
    pass


class LengthMismatch(GecError, ValueError):
    pass


class EmptyLexicon(GecError, ValueError):
    pass


class EmptyGold(GecError, ValueError):
    pass


class VersionMismatch(GecError):
    pass


class ChecksumMismatch(GecError):
    pass


class SlotCountMismatch(GecError, ValueError):
    pass


class EndpointError(GecError):
    pass


class AuthError(GecError):
    pass


class ConfigError(GecError):
    def __init__(self, message, key=None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class StepError(GecError):
    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step!r} failed: {cause}")
