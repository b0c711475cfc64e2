"""Exception hierarchy shared across the package."""


class LexigraphError(Exception):
    """Base class for all errors raised by lexigraph."""


class InvalidInputError(LexigraphError, ValueError):
    pass


class AmbiguityError(LexigraphError, ValueError):
    """A homograph was referenced without a context label."""

    def __init__(self, surface, candidates):
        self.surface = surface
        self.candidates = tuple(sorted(candidates))
        super().__init__(
            f"{surface!r} is a homograph; supply one of the context labels "
            f"{{{', '.join(self.candidates)}}}"
        )


class FileFormatError(LexigraphError):
    """A data file could not be read or parsed."""

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class InvalidScoreError(LexigraphError, ValueError):
    pass


class EmptyLayerError(LexigraphError):
    pass


class OrderingError(LexigraphError, ValueError):
    pass


class SplitConflictError(LexigraphError, ValueError):
    pass


class ShapeError(LexigraphError, ValueError):
    pass


class TrainingError(LexigraphError, RuntimeError):
    """Training produced a non-finite loss or gradient."""


class EmptyEvaluationError(LexigraphError, ValueError):
    pass
