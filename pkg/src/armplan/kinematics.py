"""Forward and inverse kinematics of the 4-DoF arm with a moving GH center.

Configuration is q = (theta, eta, zeta, phi): arm elevation from the downward
vertical, elevation-plane azimuth, humeral axial rotation, elbow flexion, all
in radians.  Torso frame: x anterior, y lateral toward the moving arm, z up;
theta = 0 is the arm hanging, with the upper arm along -z.

Because the GH center position x_sh depends on theta through the rhythm
model, inverse kinematics is a scalar fixed-point problem in theta; the plain
iteration is used first and a bracketed root find backs it up where the
iteration is not a contraction (x_sh moves fastest, relative to l_u*sin(theta),
near the elevation extremes).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ArmPlanError, SolverFailure
from .rhythm import RhythmParams, gh_center

__all__ = [
    "DOF_NAMES",
    "ArmGeometry",
    "ArmConfiguration",
    "CartesianArmPose",
    "LimitCheck",
    "IkResult",
    "SwivelElbow",
    "Unreachable",
    "NonConvergent",
    "Inconsistent",
    "LimitViolation",
    "forward_kinematics",
    "inverse_kinematics",
    "ik_from_points",
    "swivel_elbow",
    "final_configuration",
    "check_limits",
    "swivel_angle_of",
]

DOF_NAMES = ("theta", "eta", "zeta", "phi")

DEFAULT_LIMITS_DEG = ((0.0, 180.0), (-45.0, 135.0), (-90.0, 90.0), (0.0, 150.0))

FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 50
ETA_DEGENERACY_SIN = 1e-9


class Unreachable(ArmPlanError):
    """Target outside the annulus reachable by the two-link arm."""


class NonConvergent(SolverFailure):
    """The theta fixed point did not converge."""


class Inconsistent(ArmPlanError):
    """Input points violate the link-length constraints beyond tolerance."""


class LimitViolation(ArmPlanError):
    """Configuration outside the physiological joint limits."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__(f"joint limits violated: {', '.join(self.violations)}")


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return np.pi - (np.pi - a) % (2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class ArmGeometry:
    """Link lengths (meters) and per-DoF closed joint-limit intervals (radians)."""

    l_u: float = 0.30
    l_f: float = 0.33
    limits: np.ndarray = field(
        default_factory=lambda: np.radians(np.asarray(DEFAULT_LIMITS_DEG, dtype=float))
    )

    def __post_init__(self):
        object.__setattr__(self, "limits", np.asarray(self.limits, dtype=float).reshape(4, 2).copy())
        if not (self.l_u > 0 and self.l_f > 0):
            raise ValueError("link lengths must be positive")
        if np.any(self.limits[:, 0] > self.limits[:, 1]):
            raise ValueError("each joint-limit interval must be nonempty")
        lo, hi = self.limits[3]
        if lo < 0.0 or hi > np.pi:
            raise ValueError("elbow flexion limits must lie within [0, pi]")


@dataclass(frozen=True)
class ArmConfiguration:
    """Arm configuration (theta, eta, zeta, phi) in radians.

    eta and zeta are stored wrapped to (-pi, pi].
    """

    theta: float
    eta: float
    zeta: float
    phi: float

    def __post_init__(self):
        vals = (self.theta, self.eta, self.zeta, self.phi)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"non-finite configuration: {vals}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "eta", _wrap_angle(float(self.eta)))
        object.__setattr__(self, "zeta", _wrap_angle(float(self.zeta)))
        object.__setattr__(self, "phi", float(self.phi))

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.eta, self.zeta, self.phi])

    @staticmethod
    def from_array(q) -> "ArmConfiguration":
        q = np.asarray(q, dtype=float).reshape(4)
        return ArmConfiguration(q[0], q[1], q[2], q[3])


@dataclass(frozen=True, eq=False)
class CartesianArmPose:
    """Shoulder (GH center), elbow and wrist positions, meters, torso frame."""

    x_sh: np.ndarray
    x_e: np.ndarray
    x_w: np.ndarray


@dataclass(frozen=True)
class LimitCheck:
    feasible: bool
    violations: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class IkResult:
    q: ArmConfiguration
    degenerate_eta: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class SwivelElbow:
    x_e: np.ndarray
    center: np.ndarray
    radius: float
    reference_singular: bool


def arm_frame(theta: float, eta: float):
    """Orthonormal frame {u, e2, e3} of the upper arm at (theta, eta).

    u is the humerus direction, e2 = du/dtheta, e3 = u x e2; the forearm
    direction is f = cos(phi) u + sin(phi) (cos(zeta) e2 + sin(zeta) e3).
    """
    st, ct = np.sin(theta), np.cos(theta)
    sn, cn = np.sin(eta), np.cos(eta)
    u = np.array([-st * sn, st * cn, -ct])
    e2 = np.array([-ct * sn, ct * cn, st])
    e3 = np.array([cn, sn, 0.0])
    return u, e2, e3


def forward_kinematics(q: ArmConfiguration, geom: ArmGeometry, rhythm: RhythmParams) -> CartesianArmPose:
    """Shoulder/elbow/wrist positions for a configuration.

    Joint limits are not enforced here; callers check them separately.
    """
    x_sh = gh_center(np.degrees(q.theta), rhythm)
    u, e2, e3 = arm_frame(q.theta, q.eta)
    x_e = x_sh + geom.l_u * u
    w = np.cos(q.zeta) * e2 + np.sin(q.zeta) * e3
    f = np.cos(q.phi) * u + np.sin(q.phi) * w
    x_w = x_e + geom.l_f * f
    return CartesianArmPose(x_sh=x_sh, x_e=x_e, x_w=x_w)


def _clamped_acos(x: float) -> float:
    return float(np.arccos(np.clip(x, -1.0, 1.0)))


def ik_from_points(x_sh, x_e, x_w, geom: ArmGeometry, length_tol: float = 1e-6):
    """Single-pass inverse kinematics with an explicitly known GH center.

    Returns (configuration, degenerate_eta).  Used directly in measurement
    mode (motion-capture shoulder marker) and as the inner step of the
    rhythm-coupled fixed point.  Raises Inconsistent when the link-length
    residuals exceed ``length_tol`` (meters).
    """
    x_sh = np.asarray(x_sh, dtype=float)
    x_e = np.asarray(x_e, dtype=float)
    x_w = np.asarray(x_w, dtype=float)

    r_u = abs(float(np.linalg.norm(x_e - x_sh)) - geom.l_u)
    r_f = abs(float(np.linalg.norm(x_w - x_e)) - geom.l_f)
    if r_u > length_tol or r_f > length_tol:
        raise Inconsistent(
            f"link-length residuals ({r_u:.3e}, {r_f:.3e}) m exceed tolerance {length_tol:.3e}"
        )

    theta = _clamped_acos((x_sh[2] - x_e[2]) / geom.l_u)
    degenerate = np.sin(theta) < ETA_DEGENERACY_SIN
    if degenerate:
        eta = 0.0
    else:
        eta = float(np.arctan2(x_sh[0] - x_e[0], x_e[1] - x_sh[1]))

    d2 = float(np.dot(x_w - x_sh, x_w - x_sh))
    phi = _clamped_acos((d2 - geom.l_u**2 - geom.l_f**2) / (2.0 * geom.l_u * geom.l_f))

    # zeta from the decomposition of the forearm direction in the {e2, e3}
    # plane of the frame fixed by (theta, eta); the zero reference of zeta is
    # calibrated so that ik(fk(q)) = q holds with no offset.
    _, e2, e3 = arm_frame(theta, eta)
    f = (x_w - x_e) / geom.l_f
    zeta = float(np.arctan2(np.dot(f, e3), np.dot(f, e2)))

    return ArmConfiguration(theta, eta, zeta, phi), degenerate


def _solve_theta_fixed_point(w_fn, theta0: float, residual_fn=None, residual_tol: float = 1e-6,
                             tol: float = FIXED_POINT_TOL, max_iter: int = FIXED_POINT_MAX_ITER):
    """Solve theta = arccos(clip(w(theta))) on [0, pi].

    Plain iteration first (converges in one step when w is theta-independent,
    i.e. a fixed shoulder).  Because the GH-center height is not monotone in
    theta, the clipped arccos can create spurious boundary fixed points and,
    near the elevation extremes, genuinely multiple roots; a converged result
    is therefore accepted only if the cosine argument was inside [-1, 1] and
    the optional residual discriminator is satisfied.  Otherwise every root
    of F(t) = t - arccos(clip(w(t))) is located by a dense sign-change scan
    plus bracketed refinement, and the best-discriminated one is returned.
    """
    def g(t: float) -> float:
        return _clamped_acos(w_fn(t))

    def genuine(t: float) -> bool:
        try:
            return abs(w_fn(t)) <= 1.0 + 1e-9
        except Unreachable:
            return False

    converged = False
    i = 0
    th = np.pi / 2.0 if theta0 is None else float(theta0)
    if theta0 is not None:
        try:
            for i in range(max_iter):
                nxt = g(th)
                if abs(nxt - th) < tol:
                    th = nxt
                    converged = True
                    break
                th = nxt
        except Unreachable:
            converged = False
    if converged and genuine(th) and (residual_fn is None or residual_fn(th) < residual_tol):
        return th, i + 1

    # scan for every bracket of F and refine each root
    grid = np.linspace(0.0, np.pi, 1801)
    F = np.full(grid.shape, np.nan)
    for k, t in enumerate(grid):
        try:
            F[k] = t - g(t)
        except Unreachable:
            pass
    if np.all(np.isnan(F)):
        raise Unreachable("target unreachable at every elevation")
    roots = [float(grid[k]) for k in range(len(grid)) if abs(F[k]) < 1e-12]
    for k in range(len(grid) - 1):
        if np.isnan(F[k]) or np.isnan(F[k + 1]) or F[k] == 0.0 or F[k + 1] == 0.0:
            continue
        if F[k] * F[k + 1] < 0.0:
            try:
                roots.append(brentq(lambda t: t - g(t), grid[k], grid[k + 1],
                                    xtol=1e-13, maxiter=200))
            except (ValueError, Unreachable):
                continue

    candidates = [r for r in roots if genuine(r) and abs(r - g(r)) < 1e-9]
    if residual_fn is not None:
        scored = sorted((residual_fn(r), r) for r in candidates)
        candidates = [r for res, r in scored if res < residual_tol]
    else:
        candidates.sort(key=lambda r: (abs(r - th), r))
    if not candidates:
        raise NonConvergent("theta fixed point: no consistent root on [0, pi]")
    return candidates[0], max_iter


def inverse_kinematics(x_e, x_w, geom: ArmGeometry, rhythm: RhythmParams,
                       length_tol: float = 1e-6) -> IkResult:
    """Inverse kinematics with the GH center supplied by the rhythm model.

    theta appears on both sides (x_sh depends on theta), so the elevation is
    solved as a fixed point seeded from the mid-range GH position; the
    remaining angles follow in closed form.
    """
    x_e = np.asarray(x_e, dtype=float)
    x_w = np.asarray(x_w, dtype=float)

    def w(theta: float) -> float:
        x_sh = gh_center(np.degrees(theta), rhythm)
        return (x_sh[2] - x_e[2]) / geom.l_u

    def elbow_residual(theta: float) -> float:
        x_sh = gh_center(np.degrees(theta), rhythm)
        return abs(float(np.linalg.norm(x_e - x_sh)) - geom.l_u)

    theta0 = _clamped_acos(w(np.pi / 2.0))
    theta, iters = _solve_theta_fixed_point(w, theta0, residual_fn=elbow_residual,
                                            residual_tol=max(length_tol, 1e-9))

    x_sh = gh_center(np.degrees(theta), rhythm)
    q, degenerate = ik_from_points(x_sh, x_e, x_w, geom, length_tol=length_tol)
    return IkResult(q=q, degenerate_eta=degenerate, iterations=iters)


def swivel_elbow(x_f, alpha: float, geom: ArmGeometry, x_sh) -> SwivelElbow:
    """Elbow position on the redundancy circle for a wrist target.

    The circle lies in the plane normal to the shoulder->wrist axis; alpha is
    measured from the "elbow down" reference direction (projection of -z onto
    that plane), increasing toward w_hat x u_hat.
    """
    x_f = np.asarray(x_f, dtype=float)
    x_sh = np.asarray(x_sh, dtype=float)
    delta = x_f - x_sh
    D = float(np.linalg.norm(delta))
    lo = abs(geom.l_u - geom.l_f) + 1e-9
    hi = geom.l_u + geom.l_f - 1e-9
    if not (lo <= D <= hi):
        raise Unreachable(f"target distance {D:.6f} m outside reachable annulus [{lo:.6f}, {hi:.6f}]")

    w_hat = delta / D
    cos_beta = (geom.l_u**2 + D**2 - geom.l_f**2) / (2.0 * geom.l_u * D)
    cos_beta = float(np.clip(cos_beta, -1.0, 1.0))
    sin_beta = float(np.sqrt(max(0.0, 1.0 - cos_beta**2)))
    center = x_sh + geom.l_u * cos_beta * w_hat
    radius = geom.l_u * sin_beta

    ref = np.array([0.0, 0.0, -1.0])
    u_hat = ref - np.dot(ref, w_hat) * w_hat
    singular = float(np.linalg.norm(u_hat)) < 1e-9
    if singular:
        # shoulder->wrist axis vertical: fall back to projecting -x
        ref = np.array([-1.0, 0.0, 0.0])
        u_hat = ref - np.dot(ref, w_hat) * w_hat
    u_hat = u_hat / np.linalg.norm(u_hat)
    v_hat = np.cross(w_hat, u_hat)

    x_e = center + radius * (np.cos(alpha) * u_hat + np.sin(alpha) * v_hat)
    return SwivelElbow(x_e=x_e, center=center, radius=radius, reference_singular=singular)


def final_configuration(x_f, alpha: float, geom: ArmGeometry, rhythm: RhythmParams,
                        enforce_limits: bool = True) -> ArmConfiguration:
    """Full arm configuration reaching wrist target x_f at swivel angle alpha.

    Solves the outer fixed point on theta (the GH center moves with theta,
    shifting the redundancy circle), then checks joint limits.
    """
    x_f = np.asarray(x_f, dtype=float)

    def w(theta: float) -> float:
        x_sh = gh_center(np.degrees(theta), rhythm)
        elbow = swivel_elbow(x_f, alpha, geom, x_sh).x_e
        return (x_sh[2] - elbow[2]) / geom.l_u

    try:
        theta0 = _clamped_acos(w(np.pi / 2.0))
    except Unreachable:
        theta0 = None   # mid-range seed itself unreachable; go straight to the scan
    theta, _ = _solve_theta_fixed_point(w, theta0)

    x_sh = gh_center(np.degrees(theta), rhythm)
    elbow = swivel_elbow(x_f, alpha, geom, x_sh).x_e
    q, _ = ik_from_points(x_sh, elbow, x_f, geom, length_tol=1e-6)

    if enforce_limits:
        verdict = check_limits(q, geom)
        if not verdict.feasible:
            raise LimitViolation(verdict.violations)
    return q


def check_limits(q: ArmConfiguration, geom: ArmGeometry) -> LimitCheck:
    """Componentwise closed-interval joint-limit test."""
    vals = q.as_array()
    bad = [name for name, v, (lo, hi) in zip(DOF_NAMES, vals, geom.limits) if v < lo or v > hi]
    return LimitCheck(feasible=not bad, violations=tuple(bad))


def swivel_angle_of(q: ArmConfiguration, geom: ArmGeometry, rhythm: RhythmParams) -> float:
    """Swivel angle of an existing configuration (inverse of swivel_elbow)."""
    pose = forward_kinematics(q, geom, rhythm)
    circle = swivel_elbow(pose.x_w, 0.0, geom, pose.x_sh)
    delta = pose.x_w - pose.x_sh
    w_hat = delta / np.linalg.norm(delta)
    u_hat = (circle.x_e - circle.center)
    if circle.radius < 1e-12:
        return 0.0
    u_hat = u_hat / circle.radius
    v_hat = np.cross(w_hat, u_hat)
    r = pose.x_e - circle.center
    return float(np.arctan2(np.dot(r, v_hat), np.dot(r, u_hat)))
