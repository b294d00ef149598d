"""Human-like reference trajectories for 4-DoF arm and exoskeleton models.

The library plans joint-space reference motions as Riemannian geodesics of
the arm's mass-inertia metric, with boundary conditions resolved through a
scapulohumeral-rhythm model of the moving glenohumeral joint center, and maps
the result into an exoskeleton's joint space.
"""

from .rhythm import (
    PrInput, RhythmParams, GhState, eval_rhythm, gh_center, gh_center_derivative,
)
from .kinematics import (
    ArmGeometry, ArmConfiguration, CartesianArmPose, LimitCheck, IkResult,
    Unreachable, NonConvergent, Inconsistent, LimitViolation,
    forward_kinematics, inverse_kinematics, ik_from_points, swivel_elbow,
    final_configuration, check_limits, swivel_angle_of,
)
from .dynamics import (
    SegmentParams, LinkParams, MetricEval, ArmMetric,
    inertia_matrix, mass_matrix_derivative, coriolis_matrix, geodesic_rhs,
    evaluate_metric,
)
from .geodesic import (
    Metric, CallableMetric, GeodesicProblem, GeodesicPath, NonFinite, NoConvergence,
    integrate_geodesic, solve_bvp, path_energy, path_length,
)
from .planner import (
    PlanRequest, PlanResult, Candidate, Trajectory, NoFeasibleAlpha, AllSolvesFailed,
    plan, sweep_alpha, time_parameterize,
)
from .exomap import (
    ExoKinematicDescription, ExoTrajectory, Singular, OutOfLimits,
    humerus_orientation, map_to_exo, map_trajectory, load_description,
)
from .mocap import (
    MocapTrace, MocapAngles, R2Report, InconsistentLengths,
    mocap_to_angles, compute_r2, synthesize_trace,
)
from .config import SubjectConfig, load_subject_config

__version__ = "0.1.0"
