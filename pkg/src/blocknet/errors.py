class GenerationError(RuntimeError):
    """Rejection sampling ran out of attempts (region too constrained)."""


class FormatError(ValueError):
    """Base class for unreadable dataset or model files."""


class MagicMismatchError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class BaseDigestMismatchError(FormatError):
    """A block model was loaded against base networks other than the ones it was trained with."""


class DivergenceError(RuntimeError):
    def __init__(self, epoch, loss):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss
