"""Bearing-only multi-target localization toolkit."""

__version__ = "0.1.0"

from .errors import (
    BotlError,
    DegenerateGeometryError,
    DegenerateTLSError,
    InvalidInputError,
    InvalidPresetError,
    NonIdentifiableError,
    ObservabilityError,
    ScenarioFileError,
)
from .scenario import (
    ObservabilityReport,
    ReceiverTrack,
    TargetSet,
    TrajectoryPreset,
    check_observability,
    generate_track,
    load_scenario,
)
from .measurement import (
    NoiseModel,
    ObservationFrame,
    generate_observations,
    observations_to_csv,
    true_bearing,
    wrap_angle,
)
from .estimators import (
    BearingStream,
    PositionEstimate,
    SolverSettings,
    bearing_cost,
    crlb_paper,
    crlb_position,
    nls_localize,
    ov_localize,
    tls_localize,
)
from .clustering import (
    ClusterSettings,
    angular_distance,
    assign,
    cluster_by_bearing,
    cluster_by_polarization,
    clustering_error,
    kmeans,
    predict_bearings,
)
from .experiments import (
    ExperimentSpec,
    ResultTable,
    preset_estimator_comparison,
    preset_noise_sweep,
    preset_orientation_sweep,
    preset_x_sweep,
    preset_y_sweep,
    rmse,
    run_monte_carlo,
)
