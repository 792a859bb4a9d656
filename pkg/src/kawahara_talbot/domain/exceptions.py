class KawaharaError(Exception):
    """Base exception for the toolkit."""
    pass


class ValidationError(KawaharaError):
    """Raised when an input violates an operation's precondition."""
    pass


class ConfigurationError(KawaharaError):
    """Raised when there's an issue with configuration."""
    pass


class NumericalInstabilityError(KawaharaError):
    """Raised when a time integration has to be aborted."""
    pass


class StorageError(KawaharaError):
    """Raised when there's an issue reading or writing result files."""
    pass


class ExperimentStageError(KawaharaError):
    """Raised when a stage of an experiment fails; carries the stage tag."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage: str = stage
        self.cause: Exception = cause
