"""Exception hierarchy shared by all simulator modules."""


class UrbanLosError(Exception):
    """Base class for all simulator errors."""


class ParameterError(UrbanLosError):
    """A value is outside its documented domain (validation failure)."""


class InfeasibleLayoutError(UrbanLosError):
    """City generation could not place an entity within the retry budget."""


class DegenerateLinkError(UrbanLosError):
    """The ABS-GU link has zero ground extent and cannot be classified."""


class AggregationError(UrbanLosError):
    """Mismatched or inconsistent inputs to an aggregation operation."""


class MissingInputError(UrbanLosError):
    """A pipeline stage requires output files that are not present."""
