"""Blowup of rotationally symmetric sigma-model lumps and Yang-Mills instantons.

Finite-difference evolution of the radial profile ``f(r, t)`` together with
geodesic-approximation predictions and the regressions that compare them.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowupError,
    BumpNotResolvedError,
    ConfigurationError,
    DomainError,
    FitError,
    InsufficientDataError,
    IntegrationDivergedError,
    QuadratureError,
    SingularEvaluationError,
)
from .fields import (  # noqa: E402
    GridSpec,
    InitialProfile,
    ModelKind,
    RadialField,
    conservative_radial_operator,
    rhs_charge1,
    rhs_charge2,
    rhs_yangmills,
)
from .integrator import (  # noqa: E402
    BlowupReport,
    BoundaryMode,
    ProfileSnapshot,
    SimulationConfig,
    StopReason,
    TimeSeries,
    initialize,
    run,
    step,
)
from .geodesic import (  # noqa: E402
    CutoffFitParams,
    GeodesicTrajectory,
    ParabolaParams,
    cutoff_trajectory,
    cutoff_velocity,
    parabola_prediction,
    predicted_profile_ansatz,
)
