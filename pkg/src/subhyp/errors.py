"""Exception hierarchy shared by all modules."""


class SubhypError(Exception):
    """Base class; ``name`` is what the CLI writes into failure reports."""

    @property
    def name(self):
        return type(self).__name__


class InvalidDomain(SubhypError):
    pass


class DisconnectedDomain(InvalidDomain):
    pass


class PointOutsideDomain(SubhypError):
    pass


class ResolutionTooCoarse(SubhypError):
    pass


class CurveTouchesBoundary(SubhypError):
    pass


class Disconnected(SubhypError):
    pass


class SlackUnreachable(SubhypError):
    pass


class PreconditionNotMet(SubhypError):
    pass


class HypothesisFails(SubhypError):
    def __init__(self, message, minimal_constant):
        super().__init__(message)
        self.minimal_constant = minimal_constant


class BadExponent(SubhypError):
    pass


class DegenerateTrace(SubhypError):
    pass


class NotStronglySubhyperbolic(SubhypError):
    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


class ClearanceZero(SubhypError):
    pass


class EmptyIntersection(SubhypError):
    pass


class MissingDerivatives(SubhypError):
    pass


class NotRegular(SubhypError):
    pass


class FunctionSpecError(SubhypError):
    pass
