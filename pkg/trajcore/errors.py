"""
Error types raised across the toolkit.

The CLI maps each class onto its own exit code (see cli.main.EXIT_CODES).
"""


class GapError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ArgumentError(GapError, ValueError):
    """A precondition on an argument does not hold."""


class ConfigError(GapError, ValueError):
    """Configuration is invalid or inconsistent."""


class FormatError(GapError, ValueError):
    """A dataset, checkpoint or result file is malformed."""

    def __init__(self, message: str, path=None, line: int = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class TrainingError(GapError, RuntimeError):
    """Training diverged."""

    def __init__(self, message: str, epoch: int = None):
        self.epoch = epoch
        suffix = f" (epoch {epoch})" if epoch is not None else ""
        super().__init__(f"{message}{suffix}")


class RefusalError(GapError, RuntimeError):
    """Request refused because it would blow up combinatorially."""


class InternalError(GapError, RuntimeError):
    """Something that should never happen did, e.g. the scripted expert failed."""

    def __init__(self, message: str, seed=None):
        self.seed = seed
        suffix = f" (seed {seed})" if seed is not None else ""
        super().__init__(f"{message}{suffix}")
