"""Exception hierarchy shared across the package."""


class LatentSkillError(Exception):
    """Base class for all package errors."""


class ConfigError(LatentSkillError):
    """Invalid or inconsistent configuration (bad field, missing path, schema violation)."""


class SimulationDiverged(LatentSkillError):
    """Simulation state exceeded the instability guard (|value| > 1e6)."""


class InvalidStateError(LatentSkillError):
    """Non-finite or structurally invalid simulation state passed to an operation."""


class ClipFormatError(ConfigError):
    """Motion clip file violates the documented clip schema."""


class CheckpointError(LatentSkillError):
    """Checkpoint file is malformed or incompatible."""


class TrainingDiverged(LatentSkillError):
    """A training loss became non-finite; the run was aborted."""


class ProviderError(LatentSkillError):
    """Embedding provider failure (bad input, unknown goal, transport error)."""


class ReplayCacheMiss(ProviderError):
    """Replay-mode client had no recorded response for a request."""
