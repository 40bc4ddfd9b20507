"""Exception hierarchy shared by all modules."""


class SolitonError(Exception):
    """Base class for all errors raised by this package."""


class InfeasibleSystem(SolitonError):
    """The halfspaces have empty intersection."""


class UnsupportedDimension(SolitonError):
    pass


class DegenerateInput(SolitonError):
    """Input is lower-dimensional (or otherwise degenerate) where full dimension is needed."""


class LinealitySpace(DegenerateInput):
    """The polyhedron contains a line."""


class UnboundedPolyhedron(SolitonError):
    pass


class ReebViolation(SolitonError):
    """A co-weight pairs non-positively with a recession ray."""


class UnboundedIntegral(ReebViolation):
    pass


class SpecInvalid(SolitonError):
    def __init__(self, message, facet=None):
        super().__init__(message)
        self.facet = facet


class NoConvergence(SolitonError):
    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class UnboundedLevel(SolitonError):
    pass


class NotEquivariant(SolitonError):
    pass


class ZeroIdeal(SolitonError):
    pass


class FiltrationAxiomError(SolitonError):
    pass
