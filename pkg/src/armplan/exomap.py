"""Mapping from the human arm parameterization to exoskeleton joint space.

The humerus orientation determined by (theta, eta, zeta) is decomposed into
successive rotations about an exoskeleton's three shoulder axes -- a
generalized Euler triple about fixed, pairwise-distinct unit axes a1, a2, a3
with the composition R = Rot(a1, psi1) Rot(a2, psi2) Rot(a3, psi3).  The
elbow maps affinely.  Of the two decomposition branches, the one inside the
device's joint limits is used, with ties broken by continuity against the
previous sample.

The human shoulder itself is such a chain: azimuth about +z, then elevation
about the rotated +x, then axial rotation about the humerus.  The shipped
``identity.json`` description (axes z, x, -z) therefore reproduces the human
angles exactly, in chain order (eta, theta, zeta).
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArmPlanError
from .kinematics import ArmConfiguration

__all__ = [
    "ExoKinematicDescription",
    "ExoTrajectory",
    "Singular",
    "OutOfLimits",
    "humerus_orientation",
    "rotation_about",
    "map_to_exo",
    "map_trajectory",
    "load_description",
]

SINGULARITY_TOL = 1e-6


class Singular(ArmPlanError):
    """Decomposition at a branch-merging singularity with no history to disambiguate."""


class OutOfLimits(ArmPlanError):
    """No decomposition branch lies within the exoskeleton joint limits."""


@dataclass(frozen=True, eq=False)
class ExoKinematicDescription:
    """Shoulder axis triple, elbow map, and joint limits of a target device.

    Axes are unit vectors in the torso frame at the zero pose; joint limits
    are radians here (degrees in the JSON document, converted on load).
    """

    name: str
    shoulder_axes: np.ndarray
    elbow_axis_sign: float = 1.0
    elbow_offset: float = 0.0
    joint_limits: np.ndarray = field(
        default_factory=lambda: np.array([[-np.pi, np.pi]] * 4)
    )

    def __post_init__(self):
        axes = np.asarray(self.shoulder_axes, dtype=float).reshape(3, 3).copy()
        object.__setattr__(self, "shoulder_axes", axes)
        object.__setattr__(self, "joint_limits",
                           np.asarray(self.joint_limits, dtype=float).reshape(4, 2).copy())
        norms = np.linalg.norm(axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError(f"shoulder axes must be unit vectors, norms {norms}")
        for i in (0, 1):
            if abs(float(axes[i] @ axes[i + 1])) > 1.0 - 1e-9:
                raise ValueError(f"consecutive shoulder axes {i} and {i + 1} are parallel")
        if self.elbow_axis_sign not in (-1.0, 1.0):
            raise ValueError("elbow_axis_sign must be +1 or -1")


@dataclass(frozen=True, eq=False)
class ExoTrajectory:
    t: np.ndarray
    q: np.ndarray
    max_jump: float


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    a = np.asarray(axis, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return c * np.eye(3) + s * K + (1.0 - c) * np.outer(a, a)


def humerus_orientation(q: ArmConfiguration) -> np.ndarray:
    """Rotation taking the zero-pose humerus frame to the posed frame.

    Zero pose: humerus along -z, flexion-plane normal along +x.  The
    composition is azimuth about z, elevation about the rotated x, axial
    rotation about the humerus: R = Rz(eta) Rx(theta) Rz(-zeta).
    """
    return (
        rotation_about((0.0, 0.0, 1.0), q.eta)
        @ rotation_about((1.0, 0.0, 0.0), q.theta)
        @ rotation_about((0.0, 0.0, 1.0), -q.zeta)
    )


def _signed_angle_about(axis, p, q) -> float:
    """Signed angle rotating p onto q about axis (equal axial components assumed)."""
    return math.atan2(float(axis @ np.cross(p, q)), float(p @ q) - float(axis @ p) * float(axis @ q))


def _wrap(a: float) -> float:
    return math.pi - (math.pi - a) % (2.0 * math.pi)


def _decompose(R: np.ndarray, axes: np.ndarray, psi1_hint: float | None = None):
    """Both (psi1, psi2, psi3) branches with R = R1 R2 R3, plus singularity flag."""
    n1, n2, n3 = axes
    A = float(n1 @ n3)
    B = float(n1 @ np.cross(n2, n3))
    Cc = float(n1 @ n2) * float(n2 @ n3)
    t = float(n1 @ R @ n3)

    K = math.hypot(A - Cc, B)
    delta = math.atan2(B, A - Cc)
    arg = (t - Cc) / K
    if abs(arg) > 1.0 + 1e-12:
        # the orientation lies outside the set representable by this axis
        # triple (possible for skew triples, which do not cover SO(3))
        return [], False
    arg = min(1.0, max(-1.0, arg))
    half = math.acos(arg)
    singular = min(half, math.pi - half) < SINGULARITY_TOL

    branches = []
    for psi2 in ((delta + half,) if singular else (delta + half, delta - half)):
        psi2 = _wrap(psi2)
        R2 = rotation_about(n2, psi2)
        w2 = R2 @ n3
        Rn3 = R @ n3
        perp = w2 - float(n1 @ w2) * n1
        if np.linalg.norm(perp) < 1e-9:
            # middle rotation maps a3 onto a1: only psi1 + psi3 is observable;
            # hold psi1 at the previous sample (or zero) and let psi3 absorb the rest
            psi1 = 0.0 if psi1_hint is None else psi1_hint
        else:
            psi1 = _signed_angle_about(n1, w2, Rn3)
        S = R2.T @ rotation_about(n1, psi1).T @ R
        p = n2 - float(n2 @ n3) * n3
        p = p / np.linalg.norm(p)
        psi3 = _signed_angle_about(n3, p, S @ p)
        branches.append((psi1, psi2, _wrap(psi3)))
    return branches, singular


def map_to_exo(q_h: ArmConfiguration, desc: ExoKinematicDescription,
               prev: np.ndarray | None = None) -> np.ndarray:
    """Exoskeleton joint vector q_r reproducing the humerus orientation.

    Branch policy: candidates within joint limits only; ties resolved by
    proximity to ``prev`` (wrapped per-joint distance) or, without history,
    by the smaller middle-angle magnitude.  Raises Singular at a decomposition
    singularity with no ``prev``, OutOfLimits when no branch fits.
    """
    R = humerus_orientation(q_h)
    hint = None if prev is None else float(prev[0])
    branches, singular = _decompose(R, desc.shoulder_axes, psi1_hint=hint)
    if not branches:
        raise OutOfLimits(
            f"orientation not representable by the {desc.name} shoulder axis triple")
    if singular and prev is None:
        raise Singular("decomposition singular (branches merge) and no previous sample given")

    elbow = desc.elbow_axis_sign * q_h.phi + desc.elbow_offset
    lo, hi = desc.joint_limits[3]
    if elbow < lo or elbow > hi:
        raise OutOfLimits(f"elbow angle {elbow:.4f} rad outside [{lo:.4f}, {hi:.4f}]")

    candidates = []
    for idx, (p1, p2, p3) in enumerate(branches):
        shoulder = np.array([p1, p2, p3])
        ok = all(desc.joint_limits[j, 0] <= shoulder[j] <= desc.joint_limits[j, 1] for j in range(3))
        if ok:
            candidates.append((idx, shoulder))
    if not candidates:
        raise OutOfLimits(f"no decomposition branch within shoulder limits for {desc.name}")

    if len(candidates) == 1 or singular:
        shoulder = candidates[0][1]
    elif prev is not None:
        shoulder = min(
            candidates,
            key=lambda c: (sum(abs(_wrap(c[1][j] - prev[j])) for j in range(3)), c[0]),
        )[1]
    else:
        shoulder = min(candidates, key=lambda c: (abs(c[1][1]), c[0]))[1]

    return np.array([shoulder[0], shoulder[1], shoulder[2], elbow])


def map_trajectory(trajectory, desc: ExoKinematicDescription) -> ExoTrajectory:
    """Map a planned joint trajectory sample-by-sample, threading continuity.

    ``trajectory`` is a planner Trajectory (or anything with .t and .q
    arrays).  The maximum inter-sample joint jump is reported so callers can
    verify branch continuity.
    """
    t = np.asarray(trajectory.t, dtype=float)
    qs = np.asarray(trajectory.q, dtype=float)
    out = np.empty((qs.shape[0], 4))
    prev = None
    for i in range(qs.shape[0]):
        q_h = ArmConfiguration.from_array(qs[i])
        try:
            out[i] = map_to_exo(q_h, desc, prev=prev)
        except (Singular, OutOfLimits) as exc:
            raise type(exc)(f"at t = {t[i]:.6f} s: {exc}") from exc
        prev = out[i]
    if qs.shape[0] > 1:
        jumps = np.abs(np.diff(out, axis=0))
        max_jump = float(np.max(jumps))
    else:
        max_jump = 0.0
    return ExoTrajectory(t=t, q=out, max_jump=max_jump)


def _from_dict(doc: dict) -> ExoKinematicDescription:
    try:
        return ExoKinematicDescription(
            name=doc["name"],
            shoulder_axes=np.asarray(doc["shoulder_axes"], dtype=float),
            elbow_axis_sign=float(doc.get("elbow_axis_sign", 1.0)),
            elbow_offset=math.radians(float(doc.get("elbow_offset_deg", 0.0))),
            joint_limits=np.radians(np.asarray(doc["joint_limits_deg"], dtype=float)),
        )
    except KeyError as exc:
        raise ValueError(f"exoskeleton description missing field {exc}") from exc


def load_description(source) -> ExoKinematicDescription:
    """Load an ExoKinematicDescription from a JSON file path or shipped name.

    Bare names (``identity``, ``zxy_shoulder``) resolve to the descriptions
    packaged with the library.
    """
    path = Path(source)
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text())
    else:
        resource = importlib.resources.files("armplan").joinpath(
            "descriptions", f"{source}.json")
        if not resource.is_file():
            raise FileNotFoundError(f"no such exoskeleton description: {source}")
        doc = json.loads(resource.read_text())
    return _from_dict(doc)
