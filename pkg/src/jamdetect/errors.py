"""Exception types raised across the package."""


class JamDetectError(Exception):
    """Base class for package errors."""


class InvalidArgument(JamDetectError, ValueError):
    pass


class NoUnusedPilotsError(InvalidArgument):
    """K >= tau: there is no unused pilot to observe."""

    def __init__(self, K, tau):
        super().__init__(f"no unused pilots: K={K} users occupy all tau={tau} pilots (need K < tau)")
        self.K = K
        self.tau = tau


class ConfigurationError(JamDetectError):
    pass


class TrialError(JamDetectError):
    """A Monte Carlo trial failed; ``trial`` is the first trial index of the failing batch."""

    def __init__(self, trial, cause):
        super().__init__(f"trial {trial}: {cause}")
        self.trial = trial
