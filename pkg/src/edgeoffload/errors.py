"""Exception types raised across the package."""


class EdgeOffloadError(Exception):
    pass


class InvalidInput(EdgeOffloadError, ValueError):
    pass


class UnstableQueue(EdgeOffloadError):
    """Arrival rate on a node reached or exceeded its processing rate."""

    def __init__(self, message, node=None, user=None):
        super().__init__(message)
        self.node = node
        self.user = user


class InfeasibleAllocation(EdgeOffloadError):
    """Deadline-filtered capacity cannot absorb a user's arrival rate."""

    def __init__(self, message, user=None):
        super().__init__(message)
        self.user = user


class NoConvergence(EdgeOffloadError):
    pass


class VisibilityViolation(EdgeOffloadError):
    pass
