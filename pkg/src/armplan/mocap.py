"""Motion-capture trace ingestion and model-vs-experiment comparison.

Traces carry shoulder/elbow/wrist marker positions per frame in the torso
frame.  Joint angles are extracted per frame in measurement mode: the
measured shoulder marker is used directly as the GH center, so no rhythm
model enters the extraction.  Agreement between a model trajectory and a
reference is scored per DoF with the coefficient of determination r^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArmPlanError
from .kinematics import ArmGeometry, forward_kinematics, ik_from_points
from .rhythm import RhythmParams

__all__ = [
    "MocapTrace",
    "MocapAngles",
    "R2Report",
    "InconsistentLengths",
    "mocap_to_angles",
    "compute_r2",
    "synthesize_trace",
    "read_trace_csv",
    "write_trace_csv",
]

MOCAP_CSV_HEADER = "time_s,sh_x,sh_y,sh_z,el_x,el_y,el_z,wr_x,wr_y,wr_z"


class InconsistentLengths(ArmPlanError):
    """Marker distances violate the link lengths beyond tolerance."""

    def __init__(self, frames, message):
        self.frames = tuple(frames)
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class MocapTrace:
    """Marker positions per frame: t (n,), shoulder/elbow/wrist (n, 3), meters."""

    t: np.ndarray
    shoulder: np.ndarray
    elbow: np.ndarray
    wrist: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        object.__setattr__(self, "t", t)
        for name in ("shoulder", "elbow", "wrist"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(len(t), 3)
            object.__setattr__(self, name, arr)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite coordinates in {name}")
        if len(t) == 0:
            raise ValueError("empty trace")
        if not np.all(np.isfinite(t)):
            raise ValueError("non-finite timestamps")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True, eq=False)
class MocapAngles:
    """Per-frame joint angles (n, 4) and the eta-degeneracy flags (n,)."""

    t: np.ndarray
    q: np.ndarray
    degenerate: np.ndarray


@dataclass(frozen=True)
class R2Report:
    """Per-DoF coefficients of determination and their mean.

    A DoF whose reference has zero variance is undefined (None) and excluded
    from the mean, with a note saying so.
    """

    per_dof: tuple
    mean: float
    notes: tuple[str, ...] = ()


def mocap_to_angles(trace: MocapTrace, geom: ArmGeometry,
                    length_tol_frac: float = 0.05) -> MocapAngles:
    """Joint angles from marker positions, frame by frame.

    The shoulder marker is the GH center (measurement mode).  Frames whose
    link-length residuals exceed ``length_tol_frac`` of l_u / l_f raise
    InconsistentLengths listing every offending frame; degenerate frames
    (elevation at the vertical) are flagged, not dropped.
    """
    n = len(trace)
    ru = np.abs(np.linalg.norm(trace.elbow - trace.shoulder, axis=1) - geom.l_u)
    rf = np.abs(np.linalg.norm(trace.wrist - trace.elbow, axis=1) - geom.l_f)
    bad = np.flatnonzero((ru > length_tol_frac * geom.l_u) | (rf > length_tol_frac * geom.l_f))
    if bad.size:
        raise InconsistentLengths(
            bad.tolist(),
            f"{bad.size} frame(s) exceed {length_tol_frac:.0%} link-length tolerance: "
            f"first few {bad[:8].tolist()}",
        )

    q = np.empty((n, 4))
    degenerate = np.zeros(n, dtype=bool)
    for i in range(n):
        qi, deg = ik_from_points(trace.shoulder[i], trace.elbow[i], trace.wrist[i],
                                 geom, length_tol=np.inf)
        q[i] = qi.as_array()
        degenerate[i] = deg
    return MocapAngles(t=trace.t.copy(), q=q, degenerate=degenerate)


def compute_r2(model, reference) -> R2Report:
    """r^2 = 1 - SS_res / SS_tot per DoF, plus the mean over defined DoFs.

    Sequences must already be sampled on common timestamps (resample the
    model first) and have equal length >= 2.
    """
    model = np.asarray(model, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if model.shape != reference.shape:
        raise ValueError(f"shape mismatch: model {model.shape} vs reference {reference.shape}")
    if model.ndim != 2 or model.shape[0] < 2:
        raise ValueError("need (n, dof) sequences with n >= 2")

    per_dof = []
    notes = []
    defined = []
    for j in range(model.shape[1]):
        y = reference[:, j]
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        if np.ptp(y) == 0.0:   # constant column: r^2 undefined
            per_dof.append(None)
            notes.append(f"dof {j}: reference variance is zero, r^2 undefined; excluded from mean")
            continue
        ss_res = float(np.sum((y - model[:, j]) ** 2))
        r2 = 1.0 - ss_res / ss_tot
        per_dof.append(r2)
        defined.append(r2)
    if not defined:
        raise ValueError("r^2 undefined for every DoF (constant reference)")
    return R2Report(per_dof=tuple(per_dof), mean=float(np.mean(defined)), notes=tuple(notes))


def synthesize_trace(trajectory, geom: ArmGeometry, rhythm: RhythmParams,
                     noise_sigma: float = 0.0, seed: int = 0) -> MocapTrace:
    """Marker trace generated by forward kinematics along a joint trajectory.

    Optional isotropic Gaussian marker noise (meters) with a fixed seed; the
    synthetic counterpart of a capture session, used to exercise the
    comparison pipeline end to end.
    """
    from .kinematics import ArmConfiguration

    qs = np.asarray(trajectory.q, dtype=float)
    n = qs.shape[0]
    sh = np.empty((n, 3))
    el = np.empty((n, 3))
    wr = np.empty((n, 3))
    for i in range(n):
        pose = forward_kinematics(ArmConfiguration.from_array(qs[i]), geom, rhythm)
        sh[i] = pose.x_sh
        el[i] = pose.x_e
        wr[i] = pose.x_w
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        sh = sh + rng.normal(0.0, noise_sigma, sh.shape)
        el = el + rng.normal(0.0, noise_sigma, el.shape)
        wr = wr + rng.normal(0.0, noise_sigma, wr.shape)
    return MocapTrace(t=np.asarray(trajectory.t, dtype=float).copy(), shoulder=sh, elbow=el, wrist=wr)


def write_trace_csv(trace: MocapTrace, path) -> None:
    """Write the mocap CSV schema at full (17 significant digit) precision."""
    with open(path, "w", newline="\n") as fh:
        fh.write(MOCAP_CSV_HEADER + "\n")
        for i in range(len(trace)):
            row = [trace.t[i], *trace.shoulder[i], *trace.elbow[i], *trace.wrist[i]]
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_trace_csv(path) -> MocapTrace:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 10:
        raise ValueError(f"mocap CSV must have 10 columns ({MOCAP_CSV_HEADER}), got {data.shape[1]}")
    return MocapTrace(t=data[:, 0], shoulder=data[:, 1:4], elbow=data[:, 4:7], wrist=data[:, 7:10])
