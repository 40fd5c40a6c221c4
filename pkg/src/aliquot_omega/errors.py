"""Exception hierarchy; each class carries the CLI exit code for its error class."""


class AliquotError(Exception):
    exit_code = 1


class ConfigError(AliquotError, ValueError):
    """Invalid parameters or a request that exceeds the memory budget."""

    exit_code = 3


class OutputError(AliquotError, OSError):
    exit_code = 4


class CheckpointCorrupt(AliquotError):
    exit_code = 5


class CheckpointMismatch(AliquotError):
    """Checkpoint was written under a different configuration."""

    exit_code = 6


class IntegrityError(AliquotError):
    """Internal cross-check failed: inconsistent inputs or a computation bug."""

    exit_code = 7


class CongruenceInapplicable(AliquotError):
    """The congruence check does not apply (p divides s(m)); skip the sample."""
