"""Optimal partial transport for persistence measures and diagrams."""
__version__ = "0.1.0"

from .measures import (
    DIAG,
    INFINITY,
    PersistenceMeasure,
    PlanarPoint,
    diag_distance,
    ground_rho,
    pers_p,
    truncate,
)
from .transport import (
    NumericalFailure,
    TransportPlan,
    augment,
    bottleneck_distance,
    mean_measure,
    optimal_plan,
    ot_distance,
    total_cost,
)
from .barycenter import (
    BarycenterProblem,
    BarycenterState,
    exact_barycenter_lp,
    frechet_energy,
    frechet_mean,
    localized_candidate,
    multistart_frechet_mean,
)
from .representations import (
    RepresentationGrid,
    SurfaceConfig,
    betti_curve,
    lipschitz_feature_gap,
    persistence_surface,
    silhouette,
)
from .experiments import (
    ExperimentConfig,
    convergence_experiment,
    limit_measure_discretization,
    rescaled_empirical_measure,
    rips_h0_diagram_1d,
)
