"""Exception hierarchy for ldgflow.

Solver failures (everything raised while advancing a flow in time) derive
from SolverError so callers can distinguish them from geometry and
configuration problems; the CLI maps the three branches to distinct exit
codes.
"""


class LDGFlowError(Exception):
    """Base class for all ldgflow errors."""


class MeshError(LDGFlowError, ValueError):
    """Invalid mesh construction (e.g. fewer than 3 cells)."""


class CurveDefinitionError(LDGFlowError, ValueError):
    """Initial curve violates periodicity or has vanishing speed."""


class ExtinctionError(LDGFlowError, ValueError):
    """Exact shrinking-circle solution queried at or past extinction time."""


class GeometryError(LDGFlowError):
    """Polygon/diagnostics failure (non-simple polygon, degenerate cell)."""


class ConfigError(LDGFlowError, ValueError):
    """Invalid experiment configuration."""


class SolverError(LDGFlowError):
    """Base class for time-stepping failures.

    Attributes set by ``run`` when a step aborts mid-evolution:
    ``last_state`` (last valid CurveState), ``step`` (failing step index)
    and ``time`` (time of the last valid state).
    """

    last_state = None
    step = None
    time = None


class PositivityError(SolverError):
    """Parameterization speed fell to or below the positivity floor."""


class WellPosednessError(SolverError):
    """Step matrix is singular or near-singular."""


class SingularUpdateError(SolverError):
    """Rank-one (area-preserving) update denominator is numerically zero."""


class DivergenceError(SolverError):
    """Non-finite coefficients appeared during the evolution."""
