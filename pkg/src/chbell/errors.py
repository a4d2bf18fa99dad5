"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input violates a documented contract (range, shape, or finiteness)."""


class InternalConsistencyError(RuntimeError):
    """A computed quantity violates an internal invariant.

    Raised when intermediate results are inconsistent beyond numerical noise;
    this signals a model bug, not bad user input.
    """
