"""Exception hierarchy shared by all modules."""


class DominoError(Exception):
    """Base class for errors raised by spindomino."""


class ContractViolationError(DominoError, ValueError):
    """An argument violates a documented precondition."""


class SectorTooLargeError(DominoError):
    """Breadth-first enumeration exceeded the configured state cap."""

    def __init__(self, cap: int):
        super().__init__(f"sector exceeds the cap of {cap} states")
        self.cap = cap


class ClosureViolationError(DominoError):
    """A flip target is missing from the basis it should belong to."""


class DenseCapExceededError(DominoError):
    """Dense diagonalization requested above the configured dimension cap."""


class StructureError(DominoError):
    """A matrix does not have the structure an algorithm requires."""


class PropagationError(DominoError):
    """Time propagation produced non-finite amplitudes or lost unitarity."""


class SizeGuardError(DominoError):
    """A brute-force routine was asked for a system that is too large."""
