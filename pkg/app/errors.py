from pathlib import Path


class NoisyInterpError(Exception):
    """Base class for every error raised by this package"""

    pass


class DomainError(NoisyInterpError, ValueError):
    """Raised when a mathematical precondition of an operation does not hold"""

    pass


class RankDeficientError(DomainError):
    """Raised when a basis row is linearly dependent on the rows before it"""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"basis row {row} is linearly dependent on rows 0..{row - 1}")


class EnumerationRefusedError(NoisyInterpError):
    """Raised when an exhaustive computation would exceed its configured cap"""

    def __init__(self, what: str, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"{what} of size {size} exceeds the configured cap {cap}")


class ConfigError(NoisyInterpError):
    """Raised for inconsistent experiment configuration"""

    pass


class InstanceParseError(NoisyInterpError):
    """Raised when an instance or matrix file is malformed"""

    def __init__(self, path: Path | str, line: int, message: str):
        self.path = Path(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")
