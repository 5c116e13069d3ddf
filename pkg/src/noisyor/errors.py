"""Exception hierarchy shared across the package."""


class NoisyOrError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(NoisyOrError):
    """Input file is not syntactically valid."""


class ValidationError(NoisyOrError):
    """A model invariant is violated; the message names the offending entity."""


class UnknownDisease(NoisyOrError):
    pass


class UnknownSymptom(NoisyOrError):
    pass


class TooManyDiseases(NoisyOrError):
    """Brute-force enumeration refused (2^|D| blowup guard)."""


class TooManyPositiveFindings(NoisyOrError):
    """Quickscore refused (2^|F+| term guard)."""


class EvidenceImpossible(NoisyOrError):
    """The observed findings have probability zero under the model."""


class DomainError(NoisyOrError):
    """Argument outside the mathematical domain of the operation."""


class NoParents(NoisyOrError):
    """A xi solve was requested for an empty theta list."""


class NoConvergence(NoisyOrError):
    """The xi solver failed to certify a stationary point."""


class MissingXi(NoisyOrError):
    """A transformed finding has no xi entry in the assignment."""


class BadN(NoisyOrError):
    """Requested partition size outside 0..|F+|."""


class SpecError(NoisyOrError):
    """Generator spec is invalid."""


class NoEligibleLabel(NoisyOrError):
    """Query generation found no disease with at least one child symptom."""


class LengthMismatch(NoisyOrError):
    pass
