"""Exception types shared across the package."""


class BethemixError(Exception):
    """Base class for all errors raised by bethemix."""


class DomainError(BethemixError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class ZeroDenominator(BethemixError, ArithmeticError):
    """The normalizer of the message update vanished.

    This happens only when the children's messages jointly rule out every
    color, i.e. the sub-instance has no proper coloring.
    """


class UnknownNode(BethemixError, KeyError):
    pass


class CapExceeded(BethemixError):
    """Too many free vertices for exhaustive enumeration."""


class Unsatisfiable(BethemixError):
    """The boundary condition admits no proper coloring."""


class TreeTooLarge(BethemixError):
    pass


class RetriesExhausted(BethemixError):
    pass


class CeilingAmbiguous(BethemixError):
    """c*b is too close to an integer to take its ceiling reliably."""


class SamplerStuck(BethemixError):
    pass


class UnsupportedRegime(BethemixError, ValueError):
    """A lemma was requested for (q, b) outside its hypotheses."""
