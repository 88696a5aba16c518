"""Exception hierarchy shared by every module."""


class RiccilabError(Exception):
    """Base class for all library errors."""


class DegenerateMetric(RiccilabError):
    """Metric matrix is not positive definite at the requested point."""


class DegeneratePlane(RiccilabError):
    """Two vectors do not span a 2-plane (or a diagonal index pair was given)."""


class VectorOutsideSubspace(RiccilabError):
    pass


class BadSubspaceDim(RiccilabError):
    pass


class FrameNotOrthonormal(RiccilabError):
    """Frame is degenerate, ill-conditioned, or not orthonormal when required."""


class BadDimension(RiccilabError):
    pass


class BadIndex(RiccilabError):
    pass


class BadInput(RiccilabError):
    pass


class WrongCase(RiccilabError):
    """The k <= n-3 construction was requested where only k = n-2 applies."""


class ConstructionFailure(RiccilabError):
    pass


class PropertyBViolated(RiccilabError):
    """Off-diagonal sectional curvatures do not fall into the two-value pattern."""


class HypothesisNotViolated(RiccilabError):
    """The slice dimension respects the symmetry-rank bound; no pair to construct."""


class RankAnomaly(RiccilabError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DomainExit(RiccilabError):
    """A geodesic left the metric's validity domain.

    ``last_sample`` holds the final in-domain ``(t, point, velocity)``.
    """

    def __init__(self, message, last_sample=None):
        super().__init__(message)
        self.last_sample = last_sample


class OutsideInjectivityEstimate(RiccilabError):
    pass


class HypothesisViolated(RiccilabError):
    """Radial compatibility between the two metrics fails."""


class ExpansionAnomaly(RiccilabError):
    """Metric gap does not decay like t^2 (or t^4 along Jacobi fields)."""
