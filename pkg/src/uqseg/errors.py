"""Exception types shared across the toolkit."""


class UqsegError(Exception):
    """Base class for all toolkit errors."""


class NpyFormatError(UqsegError):
    """Raised when an NPY file violates the supported v1.0 subset.

    ``field`` names the offending header field ('magic', 'version', 'descr',
    'fortran_order', 'shape', 'header', 'data').
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DegenerateInputError(UqsegError):
    """Input has no usable variation (e.g. constant image passed to znormalize)."""


class ConfigurationError(UqsegError):
    """Inconsistent run configuration (e.g. TTD requested with a deterministic predictor)."""


class UndefinedVVCError(UqsegError):
    """Volume variation coefficient undefined: the structure is absent in every sample."""


class UndefinedSurfaceError(UqsegError):
    """Surface distance undefined: one of the masks has no surface points."""


class InferenceError(UqsegError):
    """A Monte Carlo sample failed; the message carries the sample index."""


class PredictorError(UqsegError):
    """Base class for external predictor failures."""


class PredictorExitError(PredictorError):
    """External predictor exited nonzero; carries command, exit code and stderr."""

    def __init__(self, cmd: list, returncode: int, stderr: str):
        super().__init__(
            f"predictor command {cmd!r} exited with code {returncode}; stderr: {stderr.strip()!r}"
        )
        self.cmd = cmd
        self.returncode = returncode
        self.stderr = stderr


class PredictorTimeoutError(PredictorError):
    """External predictor exceeded its timeout; carries command and the limit."""

    def __init__(self, cmd: list, timeout: float):
        super().__init__(f"predictor command {cmd!r} timed out after {timeout} s")
        self.cmd = cmd
        self.timeout = timeout


class PredictorOutputError(PredictorError):
    """External predictor produced a malformed output file; carries the path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"predictor output {path}: {message}")
        self.path = path
