"""Rigid-body inertia metric of the arm and its Christoffel/Coriolis terms.

The configuration-space metric is the generalized mass-inertia matrix M(q)
of the two-link arm (upper arm; forearm+hand lumped) pivoting at the GH
center: M = sum over links of m J_v^T J_v + J_w^T (R I R^T) J_w, with
center-of-mass and angular-velocity Jacobians taken with respect to
(theta, eta, zeta, phi).

By default the GH center is treated as a fixed pivot; ``couple_shoulder``
adds the rhythm-driven dX_sh/dtheta term to the position Jacobians.  The
metric derivative dM/dq is computed by central finite differences
(h = 1e-6 rad), and a Tikhonov floor reg*I (1e-9 kg m^2) keeps M invertible
through the sin(theta) = 0 degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fast
from .geodesic import Metric
from .kinematics import ArmGeometry
from .rhythm import PrInput, RhythmParams

__all__ = [
    "SegmentParams",
    "LinkParams",
    "MetricEval",
    "DEFAULT_REG",
    "FD_STEP",
    "inertia_matrix",
    "mass_matrix_derivative",
    "coriolis_matrix",
    "geodesic_rhs",
    "evaluate_metric",
    "ArmMetric",
]

DEFAULT_REG = 1e-9
FD_STEP = 1e-6

_PR_MODE_CODE = {PrInput.NORMALIZED: 0.0, PrInput.DEGREES: 1.0, PrInput.RADIANS: 2.0}


@dataclass(frozen=True, eq=False)
class SegmentParams:
    """One rigid link: mass (kg), COM position as a fraction of link length
    from the proximal joint, and principal moments about the COM
    (transverse, transverse, axial), kg m^2."""

    mass: float
    com_ratio: float
    inertia: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3).copy())
        if not self.mass >= 0:
            raise ValueError("mass must be nonnegative")
        if not (0.0 < self.com_ratio <= 1.0):
            raise ValueError("com_ratio must lie in (0, 1]")
        if np.any(self.inertia < 0):
            raise ValueError("inertia components must be nonnegative")


@dataclass(frozen=True, eq=False)
class LinkParams:
    upper: SegmentParams
    forearm: SegmentParams

    @staticmethod
    def default(geom: ArmGeometry) -> "LinkParams":
        """Rod-like anthropometric placeholders; always overridable in config.

        Transverse moments m l^2 / 12, axial 10% of transverse.
        """
        iu = 2.0 * geom.l_u**2 / 12.0
        iff = 1.7 * geom.l_f**2 / 12.0
        return LinkParams(
            upper=SegmentParams(mass=2.0, com_ratio=0.436, inertia=(iu, iu, 0.1 * iu)),
            forearm=SegmentParams(mass=1.7, com_ratio=0.530, inertia=(iff, iff, 0.1 * iff)),
        )

    @staticmethod
    def point_mass_upper(mass: float, geom: ArmGeometry) -> "LinkParams":
        """Upper arm as a point mass at the elbow, forearm massless.

        Reduces the metric to the spherical-pendulum form
        m l_u^2 diag(1, sin^2 theta, 0, 0) + reg I.
        """
        zero = SegmentParams(mass=0.0, com_ratio=0.5, inertia=(0.0, 0.0, 0.0))
        return LinkParams(
            upper=SegmentParams(mass=mass, com_ratio=1.0, inertia=(0.0, 0.0, 0.0)),
            forearm=zero,
        )


@dataclass(frozen=True, eq=False)
class MetricEval:
    """Metric bundle at one state: M, dM/dq (dm[k] = dM/dq_k), and C(q, q')."""

    m: np.ndarray
    dm: np.ndarray
    c: np.ndarray


def _pack_p(links: LinkParams, geom: ArmGeometry, couple_shoulder: bool, reg: float) -> np.ndarray:
    return np.array([
        geom.l_u, geom.l_f,
        links.upper.mass, links.upper.com_ratio, *links.upper.inertia,
        links.forearm.mass, links.forearm.com_ratio, *links.forearm.inertia,
        reg, 1.0 if couple_shoulder else 0.0,
    ])


def _pack_rp(rhythm: RhythmParams | None) -> np.ndarray:
    if rhythm is None:
        rhythm = RhythmParams()
    return np.array([
        rhythm.d0, _PR_MODE_CODE[rhythm.pr_input],
        *rhythm.coeffs_ed, *rhythm.coeffs_pr, *rhythm.coeffs_dsg,
    ])


def _q_array(q) -> np.ndarray:
    if hasattr(q, "as_array"):
        return q.as_array()
    return np.asarray(q, dtype=float).reshape(4)


def inertia_matrix(q, links: LinkParams, geom: ArmGeometry, rhythm: RhythmParams | None = None,
                   couple_shoulder: bool = False, reg: float = DEFAULT_REG) -> np.ndarray:
    """Mass-inertia matrix M(q) + reg I, symmetric positive definite, (4, 4)."""
    return _fast.mass_matrix(_q_array(q), _pack_p(links, geom, couple_shoulder, reg), _pack_rp(rhythm))


def mass_matrix_derivative(q, links: LinkParams, geom: ArmGeometry, rhythm: RhythmParams | None = None,
                           couple_shoulder: bool = False, reg: float = DEFAULT_REG,
                           h: float = FD_STEP) -> np.ndarray:
    """dM/dq by central finite differences; out[k] = dM/dq_k, (4, 4, 4)."""
    return _fast.dmass_fd(_q_array(q), _pack_p(links, geom, couple_shoulder, reg), _pack_rp(rhythm), h)


def coriolis_matrix(q, qdot, links: LinkParams, geom: ArmGeometry, rhythm: RhythmParams | None = None,
                    couple_shoulder: bool = False, h: float = FD_STEP) -> np.ndarray:
    """Coriolis matrix C(q, q') built from the Christoffel symbols of M."""
    return _fast.coriolis_matrix(
        _q_array(q), np.asarray(qdot, dtype=float).reshape(4),
        _pack_p(links, geom, couple_shoulder, DEFAULT_REG), _pack_rp(rhythm), h,
    )


def geodesic_rhs(q, qdot, links: LinkParams, geom: ArmGeometry, rhythm: RhythmParams | None = None,
                 couple_shoulder: bool = False, reg: float = DEFAULT_REG, h: float = FD_STEP) -> np.ndarray:
    """Geodesic acceleration q'' = -M(q)^{-1} C(q, q') q'."""
    return _fast.geodesic_accel(
        _q_array(q), np.asarray(qdot, dtype=float).reshape(4),
        _pack_p(links, geom, couple_shoulder, reg), _pack_rp(rhythm), h, 1.0,
    )


def evaluate_metric(q, qdot, links: LinkParams, geom: ArmGeometry, rhythm: RhythmParams | None = None,
                    couple_shoulder: bool = False, reg: float = DEFAULT_REG,
                    h: float = FD_STEP) -> MetricEval:
    return MetricEval(
        m=inertia_matrix(q, links, geom, rhythm, couple_shoulder, reg),
        dm=mass_matrix_derivative(q, links, geom, rhythm, couple_shoulder, reg, h),
        c=coriolis_matrix(q, qdot, links, geom, rhythm, couple_shoulder, h),
    )


class ArmMetric(Metric):
    """The arm inertia metric packaged for the geodesic solver.

    Stateless after construction and safe to share across concurrent solver
    instances.  ``blend_s`` < 1 is the homotopy stage metric
    (1-s) I + s M with accelerations scaled accordingly.
    """

    dim = 4

    def __init__(self, links: LinkParams, geom: ArmGeometry, rhythm: RhythmParams | None = None,
                 couple_shoulder: bool = False, reg: float = DEFAULT_REG, fd_step: float = FD_STEP,
                 blend_s: float = 1.0):
        self._links = links
        self._geom = geom
        self._rhythm = rhythm
        self._couple = couple_shoulder
        self._reg = reg
        self._h = fd_step
        self._s = float(blend_s)
        self._P = _pack_p(links, geom, couple_shoulder, reg)
        self._RP = _pack_rp(rhythm)

    def mass(self, q) -> np.ndarray:
        M = _fast.mass_matrix(np.asarray(q, dtype=float).reshape(4), self._P, self._RP)
        if self._s != 1.0:
            M = self._s * M + (1.0 - self._s) * np.eye(4)
        return M

    def accel(self, q, v) -> np.ndarray:
        return _fast.geodesic_accel(
            np.asarray(q, dtype=float).reshape(4), np.asarray(v, dtype=float).reshape(4),
            self._P, self._RP, self._h, self._s,
        )

    def blend(self, s: float) -> "ArmMetric":
        if s == 1.0:
            return self
        return ArmMetric(self._links, self._geom, self._rhythm, self._couple,
                         self._reg, self._h, blend_s=s)

    def integrate(self, q0: np.ndarray, v0: np.ndarray, n_steps: int):
        qs, vs, fail = _fast.integrate_rk4(
            np.ascontiguousarray(q0, dtype=np.float64), np.ascontiguousarray(v0, dtype=np.float64),
            n_steps, self._P, self._RP, self._h, self._s,
        )
        return qs, vs, int(fail)

    def speed_squared(self, qs: np.ndarray, vs: np.ndarray) -> np.ndarray:
        return _fast.speed_squared_along(
            np.ascontiguousarray(qs, dtype=np.float64), np.ascontiguousarray(vs, dtype=np.float64),
            self._P, self._RP, self._s,
        )
