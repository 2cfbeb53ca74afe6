"""Exception types shared by all modules."""


class PreconditionError(ValueError):
    """An input violates a documented precondition; the computation is refused."""


class CapExceededError(PreconditionError):
    """A configured memory or enumeration cap would be exceeded.

    ``required`` carries the size that was asked for (a count or a byte total).
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required
