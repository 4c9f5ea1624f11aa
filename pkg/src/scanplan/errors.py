"""Exception types shared across the package."""


class ScanplanError(Exception):
    """Base class for all errors raised by scanplan."""


class MeshParseError(ScanplanError):
    """A mesh or sidecar file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}"
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        super().__init__(prefix + message)


class GeometryError(ScanplanError):
    """A geometric precondition failed (empty mesh, no floor evidence, ...)."""


class ConfigError(ScanplanError):
    """Invalid configuration value or file."""


class StageError(ScanplanError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
