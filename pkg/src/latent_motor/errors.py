"""Exception types shared across the package."""


class LatentMotorError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LatentMotorError):
    """Bad user-supplied configuration, dimensions, or arguments."""


class InternalError(LatentMotorError):
    """Inconsistent internal state, e.g. a stale backward cache."""


class NonFiniteGradient(LatentMotorError):
    """An optimizer step was rejected because a gradient entry was NaN/Inf."""


class DegenerateEmbedding(LatentMotorError):
    """A vector with near-zero norm cannot be projected onto the sphere."""


class TrainingDiverged(LatentMotorError):
    """Too many consecutive non-finite losses during optimization."""


class CheckpointError(LatentMotorError):
    """Checkpoint file is unreadable, corrupt, or violates invariants."""
