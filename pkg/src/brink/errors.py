"""Exception hierarchy.

``ValueError`` subclasses mean the input was invalid; ``NumericalError``
subclasses mean a valid input hit a numerical failure.
"""


class NumericalError(RuntimeError):
    """A computation on valid input could not be completed."""


class ResolutionError(NumericalError):
    """The grid does not resolve the local wavelength."""


class NoBoundStateError(NumericalError):
    """No node-count transition inside the energy bracket."""


class BracketError(NumericalError):
    """The bracket does not straddle the transition it should."""
