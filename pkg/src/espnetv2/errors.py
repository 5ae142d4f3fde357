"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shapes are inconsistent with the requested operation."""


class ConfigError(ValueError):
    """A layer, block, schedule, or network configuration is invalid."""


class TrainingDiverged(RuntimeError):
    """A training run produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")
