"""Subject configuration: one JSON document for anthropometrics, rhythm
coefficients, joint limits, and solver/planner tolerances.

Every field is optional and defaults to the values documented in the owning
module; unknown keys are rejected so typos fail loudly.  Angles are degrees
in the file for readability and radians in memory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .dynamics import LinkParams, SegmentParams, DEFAULT_REG, FD_STEP
from .kinematics import ArmGeometry, DOF_NAMES
from .rhythm import RhythmParams, PrInput

__all__ = [
    "SolverSettings",
    "PlannerSettings",
    "DynamicsSettings",
    "SubjectConfig",
    "load_subject_config",
]


@dataclass(frozen=True)
class SolverSettings:
    n_steps: int = 200
    tol_endpoint: float = 1e-9
    max_newton: int = 50


@dataclass(frozen=True)
class PlannerSettings:
    alpha_grid_step: float = math.radians(5.0)
    alpha_refine_tol: float = math.radians(0.1)
    duration: float = 2.0
    n_samples: int = 200


@dataclass(frozen=True)
class DynamicsSettings:
    couple_shoulder: bool = False
    fd_step: float = FD_STEP
    regularization: float = DEFAULT_REG


@dataclass(frozen=True, eq=False)
class SubjectConfig:
    geom: ArmGeometry = field(default_factory=ArmGeometry)
    links: LinkParams = None
    rhythm: RhythmParams = field(default_factory=RhythmParams)
    solver: SolverSettings = field(default_factory=SolverSettings)
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    dynamics: DynamicsSettings = field(default_factory=DynamicsSettings)

    def __post_init__(self):
        if self.links is None:
            object.__setattr__(self, "links", LinkParams.default(self.geom))


def _check_keys(doc: dict, allowed, where: str):
    extra = set(doc) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}; allowed: {sorted(allowed)}")


def _positive(value, where: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{where}: must be a positive finite number, got {v}")
    return v


def _parse_geom(doc: dict) -> ArmGeometry:
    _check_keys(doc, {"l_u", "l_f", "limits_deg"}, "arm")
    l_u = _positive(doc.get("l_u", 0.30), "arm.l_u")
    l_f = _positive(doc.get("l_f", 0.33), "arm.l_f")
    limits = ArmGeometry().limits.copy()
    if "limits_deg" in doc:
        ld = doc["limits_deg"]
        _check_keys(ld, set(DOF_NAMES), "arm.limits_deg")
        for i, name in enumerate(DOF_NAMES):
            if name in ld:
                pair = ld[name]
                if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                    raise ConfigError(f"arm.limits_deg.{name}: expected [lo, hi] degrees")
                limits[i] = np.radians([float(pair[0]), float(pair[1])])
    try:
        return ArmGeometry(l_u=l_u, l_f=l_f, limits=limits)
    except ValueError as exc:
        raise ConfigError(f"arm: {exc}") from None


def _parse_segment(doc: dict, length: float, default_mass: float, default_com: float,
                   where: str) -> SegmentParams:
    _check_keys(doc, {"mass", "com_ratio", "inertia"}, where)
    mass = _positive(doc.get("mass", default_mass), f"{where}.mass")
    com = _positive(doc.get("com_ratio", default_com), f"{where}.com_ratio")
    if "inertia" in doc:
        inertia = np.asarray(doc["inertia"], dtype=float)
        if inertia.shape != (3,):
            raise ConfigError(f"{where}.inertia: expected 3 principal moments")
    else:
        it = mass * length**2 / 12.0
        inertia = np.array([it, it, 0.1 * it])
    try:
        return SegmentParams(mass=mass, com_ratio=com, inertia=inertia)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_links(doc: dict, geom: ArmGeometry) -> LinkParams:
    _check_keys(doc, {"upper", "forearm"}, "links")
    return LinkParams(
        upper=_parse_segment(doc.get("upper", {}), geom.l_u, 2.0, 0.436, "links.upper"),
        forearm=_parse_segment(doc.get("forearm", {}), geom.l_f, 1.7, 0.530, "links.forearm"),
    )


def _parse_rhythm(doc: dict) -> RhythmParams:
    _check_keys(doc, {"d0", "origin", "pr_input", "coeffs_ed", "coeffs_pr", "coeffs_dsg"}, "rhythm")
    kwargs = {}
    if "d0" in doc:
        kwargs["d0"] = _positive(doc["d0"], "rhythm.d0")
    if "origin" in doc:
        origin = np.asarray(doc["origin"], dtype=float)
        if origin.shape != (3,):
            raise ConfigError("rhythm.origin: expected a 3-vector (meters)")
        kwargs["origin"] = origin
    if "pr_input" in doc:
        try:
            kwargs["pr_input"] = PrInput(doc["pr_input"])
        except ValueError:
            raise ConfigError(
                f"rhythm.pr_input: expected one of {[m.value for m in PrInput]}") from None
    for key in ("coeffs_ed", "coeffs_pr", "coeffs_dsg"):
        if key in doc:
            kwargs[key] = tuple(float(c) for c in doc[key])
    try:
        return RhythmParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"rhythm: {exc}") from None


def _parse_solver(doc: dict) -> SolverSettings:
    _check_keys(doc, {"n_steps", "tol_endpoint", "max_newton"}, "solver")
    s = SolverSettings(
        n_steps=int(doc.get("n_steps", 200)),
        tol_endpoint=float(doc.get("tol_endpoint", 1e-9)),
        max_newton=int(doc.get("max_newton", 50)),
    )
    if s.n_steps < 16:
        raise ConfigError("solver.n_steps: must be at least 16")
    if not s.tol_endpoint > 0:
        raise ConfigError("solver.tol_endpoint: must be positive")
    return s


def _parse_planner(doc: dict) -> PlannerSettings:
    _check_keys(doc, {"alpha_grid_step_deg", "alpha_refine_tol_deg", "duration_s", "n_samples"},
                "planner")
    s = PlannerSettings(
        alpha_grid_step=math.radians(_positive(doc.get("alpha_grid_step_deg", 5.0),
                                               "planner.alpha_grid_step_deg")),
        alpha_refine_tol=math.radians(_positive(doc.get("alpha_refine_tol_deg", 0.1),
                                                "planner.alpha_refine_tol_deg")),
        duration=_positive(doc.get("duration_s", 2.0), "planner.duration_s"),
        n_samples=int(doc.get("n_samples", 200)),
    )
    if not s.alpha_grid_step > s.alpha_refine_tol:
        raise ConfigError("planner: alpha_grid_step_deg must exceed alpha_refine_tol_deg")
    return s


def _parse_dynamics(doc: dict) -> DynamicsSettings:
    _check_keys(doc, {"couple_shoulder", "fd_step", "regularization"}, "dynamics")
    return DynamicsSettings(
        couple_shoulder=bool(doc.get("couple_shoulder", False)),
        fd_step=_positive(doc.get("fd_step", FD_STEP), "dynamics.fd_step"),
        regularization=_positive(doc.get("regularization", DEFAULT_REG), "dynamics.regularization"),
    )


def parse_subject_config(doc: dict) -> SubjectConfig:
    if not isinstance(doc, dict):
        raise ConfigError("subject config must be a JSON object")
    _check_keys(doc, {"arm", "links", "rhythm", "solver", "planner", "dynamics"}, "subject config")
    geom = _parse_geom(doc.get("arm", {}))
    return SubjectConfig(
        geom=geom,
        links=_parse_links(doc.get("links", {}), geom),
        rhythm=_parse_rhythm(doc.get("rhythm", {})),
        solver=_parse_solver(doc.get("solver", {})),
        planner=_parse_planner(doc.get("planner", {})),
        dynamics=_parse_dynamics(doc.get("dynamics", {})),
    )


def load_subject_config(path) -> SubjectConfig:
    """Load and validate a subject JSON file; messages carry line numbers
    for parse errors and dotted paths for schema errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_subject_config(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
