"""Exception hierarchy shared by every module."""


class TournamentError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidProbability(TournamentError):
    pass


class NotComplementary(TournamentError):
    pass


class TooLarge(TournamentError):
    pass


class BadCoalition(TournamentError):
    pass


class ZeroEpsilon(TournamentError):
    pass


class NotStrict(TournamentError):
    pass


class TooFewTeams(TournamentError):
    pass


class ExactModeTooLarge(TooLarge):
    pass


class NotMatchingRule(TournamentError):
    pass


class DegenerateInputs(TournamentError):
    pass


class ViolationFound(AssertionError):
    """A checked property failed; ``counterexample`` carries the witness."""

    def __init__(self, message, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample
