"""Shared exception types."""


class NewsprismError(Exception):
    """Base class for all package errors."""


class ParseError(NewsprismError):
    """A persisted record could not be parsed."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class IntegrityError(NewsprismError):
    """Data violates a structural invariant (duplicate ids, bad references)."""


class TrainingDiverged(NewsprismError):
    """Non-finite loss encountered during gradient descent."""

    def __init__(self, message, epoch=None, batch=None, iteration=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.iteration = iteration
