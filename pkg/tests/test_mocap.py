"""Mocap ingestion and r^2 comparison tests."""

import numpy as np
import pytest

from armplan import ArmConfiguration, forward_kinematics
from armplan.mocap import (
    InconsistentLengths,
    MocapTrace,
    compute_r2,
    mocap_to_angles,
    read_trace_csv,
    synthesize_trace,
    write_trace_csv,
)
from conftest import sample_configurations


class ArrayTraj:
    def __init__(self, t, q):
        self.t = t
        self.q = q


def make_trajectory(geom, n=100):
    # a mid-range ADL-like reach; elevations stay away from the vertical so
    # the marker-noise amplification of eta stays bounded
    q0 = np.radians([40.0, 5.0, -10.0, 80.0])
    q1 = np.radians([110.0, 60.0, 30.0, 40.0])
    t = np.linspace(0.0, 2.0, n)
    s = (t / t[-1]) ** 2 * (3 - 2 * t / t[-1])
    q = q0 + s[:, None] * (q1 - q0)
    return ArrayTraj(t, q)


def test_angles_recovered_from_synthetic_trace(geom, rhythm):
    traj = make_trajectory(geom)
    trace = synthesize_trace(traj, geom, rhythm)
    angles = mocap_to_angles(trace, geom)
    np.testing.assert_allclose(angles.q, traj.q, rtol=0, atol=1e-9)
    assert not angles.degenerate.any()


def test_noisy_trace_within_one_degree_rms(geom, rhythm):
    # 2 mm isotropic marker noise maps into ~0.5-1 deg of joint noise at this
    # anthropometry (the elbow-flexion channel is the most sensitive); the
    # pooled RMS over the sequence stays below 1 deg
    traj = make_trajectory(geom)
    trace = synthesize_trace(traj, geom, rhythm, noise_sigma=0.002, seed=11)
    angles = mocap_to_angles(trace, geom)
    err = angles.q - traj.q
    assert np.degrees(np.sqrt(np.mean(err**2))) < 1.0
    assert np.all(np.degrees(np.sqrt(np.mean(err**2, axis=0))) < 1.5)


def test_single_frame_hanging_pose(geom):
    trace = MocapTrace(t=[0.0], shoulder=[[0, 0, 0]], elbow=[[0, 0, -geom.l_u]],
                       wrist=[[0, 0, -geom.l_u - geom.l_f]])
    angles = mocap_to_angles(trace, geom)
    assert angles.degenerate[0]
    assert angles.q[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert angles.q[0, 1] == 0.0


def test_inconsistent_lengths_lists_frames(geom, rhythm):
    traj = make_trajectory(geom, n=10)
    trace = synthesize_trace(traj, geom, rhythm)
    elbow = trace.elbow.copy()
    elbow[3] *= 1.2
    elbow[7] *= 1.2
    broken = MocapTrace(t=trace.t, shoulder=trace.shoulder, elbow=elbow, wrist=trace.wrist)
    with pytest.raises(InconsistentLengths) as err:
        mocap_to_angles(broken, geom)
    assert set(err.value.frames) == {3, 7}


def test_trace_validation():
    with pytest.raises(ValueError):
        MocapTrace(t=[0.0, 0.0], shoulder=np.zeros((2, 3)), elbow=np.zeros((2, 3)),
                   wrist=np.zeros((2, 3)))
    with pytest.raises(ValueError):
        MocapTrace(t=[0.0], shoulder=[[np.nan, 0, 0]], elbow=np.zeros((1, 3)),
                   wrist=np.zeros((1, 3)))


def test_r2_identity_and_mean_model():
    y = np.column_stack([np.linspace(0, 1, 50), np.sin(np.linspace(0, 3, 50))])
    perfect = compute_r2(y, y)
    assert perfect.per_dof == (1.0, 1.0) and perfect.mean == 1.0
    mean_model = np.tile(y.mean(axis=0), (50, 1))
    zero = compute_r2(mean_model, y)
    assert zero.per_dof[0] == pytest.approx(0.0, abs=1e-12)
    assert zero.per_dof[1] == pytest.approx(0.0, abs=1e-12)


def test_r2_hand_checked_example():
    ref = np.array([[1.0], [2.0], [3.0], [4.0]])
    model = np.array([[1.1], [1.9], [3.2], [3.9]])
    rep = compute_r2(model, ref)
    assert rep.per_dof[0] == pytest.approx(1.0 - 0.07 / 5.0, rel=1e-12)
    assert rep.mean == pytest.approx(0.986, rel=1e-12)


def test_r2_zero_variance_column_excluded():
    ref = np.column_stack([np.linspace(0, 1, 20), np.full(20, 0.7)])
    model = ref + 0.01
    rep = compute_r2(model, ref)
    assert rep.per_dof[1] is None
    assert rep.notes and "variance" in rep.notes[0]
    assert rep.mean == rep.per_dof[0]


def test_r2_input_validation():
    with pytest.raises(ValueError):
        compute_r2(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        compute_r2(np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        compute_r2(np.ones((5, 1)), np.ones((5, 1)))   # every column constant


def test_trace_csv_roundtrip(tmp_path, geom, rhythm):
    traj = make_trajectory(geom, n=37)
    trace = synthesize_trace(traj, geom, rhythm, noise_sigma=0.001, seed=3)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    back = read_trace_csv(path)
    assert np.array_equal(back.t, trace.t)
    assert np.array_equal(back.shoulder, trace.shoulder)
    assert np.array_equal(back.elbow, trace.elbow)
    assert np.array_equal(back.wrist, trace.wrist)
