"""Exception types raised across the package."""


class ValidationError(ValueError):
    """A parameter or configuration field is outside its allowed range."""


class InvalidRegime(ValueError):
    """A threshold formula was evaluated where its hypothesis fails
    (e.g. ``log Z_n + mu <= 0``)."""


class RejectionBudgetExceeded(RuntimeError):
    """Survival-conditioned tree sampling gave up."""


class EmptySample(ValueError):
    pass


class IncompleteExperiment(RuntimeError):
    """An output directory is missing files a completed run must contain."""

    def __init__(self, path, missing):
        self.path = path
        self.missing = list(missing)
        super().__init__(
            f"incomplete experiment in {path}: missing {', '.join(self.missing)}"
        )
