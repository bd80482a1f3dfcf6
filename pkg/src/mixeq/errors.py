"""Exception hierarchy for mixeq.

All library errors derive from :class:`MixeqError`, so callers (and the CLI)
can distinguish domain errors from programming bugs with one except clause.
"""

from __future__ import annotations


class MixeqError(Exception):
    """Base class for all mixeq domain errors."""


class SchemaError(MixeqError):
    """A network file violates the input schema. Message carries the field path."""


class NoPathExists(MixeqError):
    """No directed path connects the origin to the destination."""


class PathBudgetExceeded(MixeqError):
    """Path enumeration exceeded the configured budget."""


class UnknownLink(MixeqError):
    """A declared path references a link id missing from the network."""


class EmptySupport(MixeqError):
    """A support-restricted matrix was requested for an empty path set."""


class DimensionMismatch(MixeqError):
    """Vector or matrix shapes do not match the network layout."""


class InfeasibleFlow(MixeqError):
    """A flow pattern violates demand or nonnegativity constraints."""


class NoValidSupport(MixeqError):
    """Support enumeration exhausted all candidates without finding an equilibrium."""


class DegenerateSystem(MixeqError):
    """A candidate support produced an unsolvably inconsistent linear system."""


class GridBudgetExceeded(MixeqError):
    """The brute-force grid would exceed the evaluation budget."""


class NotPathMultigraph(MixeqError):
    """An operation requiring a series of parallel-link bundles got a general network."""


class RequiresLinearCosts(MixeqError):
    """An exact-algebra operation was called on a network with nonlinear links."""


class RequiresSingleExponent(MixeqError):
    """An operation assuming one shared cost exponent got mixed exponents."""


class SingularMv(MixeqError):
    """The support cost matrix is singular (dependent incidence columns)."""
