"""Exception types raised by the library."""


class IdealconvError(Exception):
    """Base class for library errors."""


class InsufficientWindow(IdealconvError):
    """Thinning indices exceed the enumerated window everywhere."""


class BeyondHorizon(IdealconvError):
    """A query position lies past the window horizon."""


class ScheduleBeyondHorizon(IdealconvError):
    """A checkpoint schedule reaches past the data horizon."""


class GridTooCoarse(IdealconvError):
    """A limit-parameter grid has too few points to show a trend."""


class ZeroTotalWeight(IdealconvError):
    """A relative-weight ratio has an identically zero denominator."""


class GeneratorExhausted(IdealconvError):
    """No admissible random set was found within the draw budget."""


class GridEpsilonMismatch(IdealconvError):
    """Neighborhood radius too large for the candidate grid pitch."""


class SelectorExhausted(IdealconvError):
    """A selector yields too few ones below its materialization bound."""


class AllUndecided(IdealconvError):
    """Every trial of an experiment came back undecided."""
