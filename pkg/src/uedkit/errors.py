"""Error hierarchy. Each class maps to a CLI exit code."""


class UedError(Exception):
    exit_code = 1


class ConfigError(UedError):
    exit_code = 3


class DataError(UedError):
    exit_code = 4


class ProviderError(UedError):
    """An external provider (embedding or LLM endpoint) kept failing.

    ``checkpoint`` points at the file that lets the run resume.
    """

    exit_code = 5

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint
