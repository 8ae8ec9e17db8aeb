"""Exception types shared across the package."""


class NormclError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NormclError):
    """A configuration value is missing, out of range, or inconsistent."""


class DataError(NormclError):
    """Corpus ingestion failed: empty stream, misaligned files, or no
    surviving sentence pairs."""


class ShapeError(NormclError):
    """Tensor shapes are incompatible for the requested kernel."""


class CheckpointError(NormclError):
    """A checkpoint file is unreadable: bad magic, wrong version, or
    truncated payload."""


class DegenerateStateError(NormclError):
    """A numeric quantity reached a state its consumer cannot use, e.g.
    an all-zero embedding matrix."""


class TrainingDiverged(NormclError):
    """Loss or gradients became NaN/Inf; carries the step and batch ids."""

    def __init__(self, message: str, step: int | None = None, batch_ids=None):
        super().__init__(message)
        self.step = step
        self.batch_ids = list(batch_ids) if batch_ids is not None else None
