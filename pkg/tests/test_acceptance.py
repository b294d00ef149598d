"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS line (run with ``pytest -s`` to see them inline).
Runtime bounds are asserted on the wall clock of the core computation; the
compiled kernels are warmed once by a session fixture so timings reflect the
steady state.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

import armplan
from armplan import (
    ArmConfiguration,
    ArmGeometry,
    RhythmParams,
    check_limits,
    eval_rhythm,
    forward_kinematics,
    inverse_kinematics,
    swivel_angle_of,
)
from armplan.cli import main as cli_main
from armplan.dynamics import (
    DEFAULT_REG,
    ArmMetric,
    LinkParams,
    coriolis_matrix,
    inertia_matrix,
)
from armplan.exomap import humerus_orientation, load_description, map_trajectory, rotation_about
from armplan.geodesic import CallableMetric, GeodesicProblem, solve_bvp
from armplan.kinematics import final_configuration
from armplan.mocap import synthesize_trace, write_trace_csv
from armplan.planner import PlanRequest, plan
from conftest import sample_configurations

Q_START = ArmConfiguration(math.radians(30.0), math.radians(10.0), 0.0, math.radians(60.0))
TARGET = np.array([0.25, 0.30, 0.25])


def _report(name: str, elapsed: float, detail: str = ""):
    extra = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS in {elapsed:.3f} s{extra}")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels(arm_metric):
    arm_metric.integrate(np.array([1.0, 0.2, 0.1, 0.9]), np.zeros(4), 16)


@pytest.fixture(scope="session")
def full_plan(geom, links, rhythm):
    """The 72-candidate full-metric plan used by criteria 6 and 7."""
    request = PlanRequest(x_f=TARGET, q_start=Q_START)
    t0 = time.perf_counter()
    result = plan(request, geom, links, rhythm)
    return result, time.perf_counter() - t0


def test_criterion_1_rhythm_polynomial_fidelity(rhythm):
    t0 = time.perf_counter()
    ed = (Fraction(149, 10**11), Fraction(-428, 10**9), Fraction(144, 10**7),
          Fraction(52, 10**4), Fraction(-1357, 10**4), Fraction(7078, 10**4))
    pr = (Fraction(182, 100), Fraction(-8073, 1000), Fraction(-399, 100))
    dsg = (Fraction(-16, 10**6), Fraction(3, 10**4), Fraction(1))
    for theta in (0, 50, 100, 150, 180):
        st = eval_rhythm(float(theta), rhythm)
        th = Fraction(theta)
        want_ed = float(sum(c * th ** (5 - i) for i, c in enumerate(ed)))
        x = Fraction(theta, 180)
        want_pr = float(pr[0] * x**3 + pr[1] * x**2 + pr[2] * x)
        want_dsg = float(Fraction(18, 100) * (dsg[0] * th**2 + dsg[1] * th + dsg[2]))
        for got, want in ((st.phi_ed, want_ed), (st.phi_pr, want_pr), (st.d_sg, want_dsg)):
            if want == 0.0:
                assert got == 0.0
            else:
                assert abs(got - want) <= 1e-12 * abs(want)
    assert eval_rhythm(0.0, rhythm).phi_pr == 0.0
    assert eval_rhythm(0.0, rhythm).d_sg == rhythm.d0
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("1 rhythm-polynomial-fidelity", elapsed)


def test_criterion_2_ik_fk_roundtrip(geom, rhythm):
    qs = sample_configurations(geom, 1000, seed=5)
    t0 = time.perf_counter()
    worst = 0.0
    for q in qs:
        pose = forward_kinematics(ArmConfiguration.from_array(q), geom, rhythm)
        rec = inverse_kinematics(pose.x_e, pose.x_w, geom, rhythm).q.as_array()
        err = np.abs(rec - q)
        err[1] = min(err[1], 2 * np.pi - err[1])
        err[2] = min(err[2], 2 * np.pi - err[2])
        worst = max(worst, float(err.max()))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-9
    assert elapsed < 5.0
    _report("2 ik-fk-roundtrip", elapsed, f"worst err {worst:.2e} rad over 1000 samples")


def test_criterion_3_sphere_and_flat_oracles():
    t0 = time.perf_counter()
    sphere = CallableMetric(lambda q: np.diag([1.0, np.sin(q[0]) ** 2]), dim=2)
    path = solve_bvp(GeodesicProblem(metric=sphere, q0=np.array([np.pi / 2, 0.0]),
                                     q1=np.array([np.pi / 2, np.pi / 2])))
    assert abs(path.length - np.pi / 2) < 1e-6
    assert np.max(np.abs(path.qs[100] - [np.pi / 2, np.pi / 4])) < 1e-6

    flat = CallableMetric(lambda q: np.eye(4), accel_fn=lambda q, v: np.zeros(4), dim=4)
    q0 = np.array([0.4, -0.2, 0.8, 0.1])
    q1 = np.array([1.0, 0.5, -0.4, 1.3])
    straight = solve_bvp(GeodesicProblem(metric=flat, q0=q0, q1=q1))
    lam = straight.lambdas[:, None]
    assert np.max(np.abs(straight.qs - (q0 + lam * (q1 - q0)))) < 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _report("3 geodesic-correctness-oracle", elapsed)


def test_criterion_4_arm_metric_geodesic_invariants(arm_metric, geom):
    qs = sample_configurations(geom, 40, seed=41)
    t0 = time.perf_counter()
    for i in range(20):
        q0, q1 = qs[2 * i], qs[2 * i + 1]
        path = solve_bvp(GeodesicProblem(metric=arm_metric, q0=q0, q1=q1))
        assert np.max(np.abs(path.qs[-1] - q1)) < 1e-9
        s = np.sqrt(arm_metric.speed_squared(path.qs, path.qdots))
        assert (s.max() - s.min()) / s.mean() < 1e-6
        assert abs(path.energy - path.length**2) <= 1e-6 * path.energy
        rev = solve_bvp(GeodesicProblem(metric=arm_metric, q0=q1, q1=q0))
        assert np.max(np.abs(rev.qs[::-1] - path.qs)) < 1e-8
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _report("4 arm-metric-geodesic-invariants", elapsed, "20 BVPs + reversals")


def test_criterion_5_dynamics_structure(geom, rhythm, links):
    t0 = time.perf_counter()
    rng = np.random.default_rng(61)
    for q in sample_configurations(geom, 500, seed=59):
        M = inertia_matrix(q, links, geom, rhythm)
        assert np.max(np.abs(M - M.T)) <= 1e-12 * np.max(np.abs(M))
        assert np.linalg.eigvalsh(M).min() > 1e-9

    h = 1e-6
    for q in sample_configurations(geom, 25, seed=67):
        qd = rng.uniform(-1.0, 1.0, 4)
        C = coriolis_matrix(q, qd, links, geom, rhythm)
        Mdot = (inertia_matrix(q + h * qd, links, geom, rhythm)
                - inertia_matrix(q - h * qd, links, geom, rhythm)) / (2 * h)
        S = Mdot - 2 * C
        assert np.max(np.abs(S + S.T)) < 1e-4

    m_u = 2.2
    pm = LinkParams.point_mass_upper(m_u, geom)
    for theta in np.linspace(0.15, 2.9, 12):
        q = np.array([theta, 0.8, -0.5, 1.0])
        M = inertia_matrix(q, pm, geom, rhythm)
        want = m_u * geom.l_u**2 * np.diag([1.0, np.sin(theta) ** 2, 0.0, 0.0]) \
            + DEFAULT_REG * np.eye(4)
        # 1e-10 relative, machine floor on the structurally zero entries
        np.testing.assert_allclose(M, want, rtol=1e-10, atol=1e-15)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("5 dynamics-structure", elapsed)


def test_criterion_6_minimum_energy_selection(full_plan, geom, links, rhythm):
    result, plan_elapsed = full_plan
    assert plan_elapsed < 60.0

    # full metric: argmin certificate on the candidate table
    energies = [c.energy for c in result.candidates if c.energy is not None]
    assert energies and result.energy_star <= min(energies)
    assert len(result.candidates) == 72

    # identity-metric override against the dense brute-force oracle
    flat = CallableMetric(lambda q: np.eye(4), accel_fn=lambda q, v: np.zeros(4), dim=4)
    request = PlanRequest(x_f=TARGET, q_start=Q_START)
    t0 = time.perf_counter()
    flat_result = plan(request, geom, links, rhythm, metric=flat)
    flat_elapsed = time.perf_counter() - t0
    assert flat_elapsed < 60.0

    q0 = Q_START.as_array()
    best_alpha, best_e = None, np.inf
    for alpha in np.arange(-np.pi, np.pi, math.radians(0.01)):
        try:
            qf = final_configuration(TARGET, float(alpha), geom, rhythm)
        except Exception:
            continue
        if math.sin(qf.theta) < 0.05:
            continue
        e = float(np.sum((qf.as_array() - q0) ** 2))
        if e < best_e:
            best_alpha, best_e = float(alpha), e
    assert best_alpha is not None
    assert abs(flat_result.alpha_star - best_alpha) <= request.alpha_refine_tol + math.radians(0.01)
    _report("6 minimum-energy-selection", plan_elapsed,
            f"full plan {plan_elapsed:.1f} s, identity plan {flat_elapsed:.1f} s, "
            f"alpha* {math.degrees(flat_result.alpha_star):.3f} vs brute "
            f"{math.degrees(best_alpha):.3f} deg")


def test_criterion_7_exo_map_exactness(full_plan):
    result, _ = full_plan
    t0 = time.perf_counter()
    desc = load_description("zxy_shoulder")
    mapped = map_trajectory(result.trajectory, desc)
    worst = 0.0
    for i in range(len(mapped.t)):
        q_h = ArmConfiguration.from_array(result.trajectory.q[i])
        R = rotation_about(desc.shoulder_axes[0], mapped.q[i, 0]) \
            @ rotation_about(desc.shoulder_axes[1], mapped.q[i, 1]) \
            @ rotation_about(desc.shoulder_axes[2], mapped.q[i, 2])
        worst = max(worst, float(np.linalg.norm(R - humerus_orientation(q_h))))
    assert worst < 1e-9

    ident = map_trajectory(result.trajectory, load_description("identity"))
    human_chain = result.trajectory.q[:, [1, 0, 2, 3]]   # (eta, theta, zeta, phi)
    assert np.max(np.abs(ident.q - human_chain)) < 1e-9
    elapsed = time.perf_counter() - t0
    _report("7 exo-map-exactness", elapsed, f"worst Frobenius {worst:.2e} over 200 samples")


def test_criterion_8_compare_surrogate(tmp_path, geom, rhythm):
    # the published 0.92 mean r^2 over 120 captured trials is not reproducible
    # without that dataset; the synthetic surrogate checks the same pipeline
    cfg_path = tmp_path / "subject.json"
    cfg_path.write_text(json.dumps({"planner": {"alpha_grid_step_deg": 10.0,
                                                "alpha_refine_tol_deg": 0.1}}))
    start_path = tmp_path / "q0.json"
    start_path.write_text(json.dumps({"theta_rad": Q_START.theta, "eta_rad": Q_START.eta,
                                      "zeta_rad": Q_START.zeta, "phi_rad": Q_START.phi}))
    traj_path = tmp_path / "traj.csv"
    t0 = time.perf_counter()
    assert cli_main(["plan", "--config", str(cfg_path), "--start", str(start_path),
                     "--target", "0.25,0.30,0.25", "--out", str(traj_path)]) == 0
    data = np.loadtxt(str(traj_path), delimiter=",", skiprows=1)

    class Traj:
        t = data[:, 0]
        q = data[:, 1:5]

    clean = synthesize_trace(Traj(), geom, rhythm)
    clean_path = tmp_path / "clean.csv"
    write_trace_csv(clean, clean_path)
    report_path = tmp_path / "clean.json"
    overlay_path = tmp_path / "overlay.csv"
    assert cli_main(["compare", "--config", str(cfg_path), "--mocap", str(clean_path),
                     "--out", str(report_path), "--overlay", str(overlay_path)]) == 0
    clean_r2 = json.loads(report_path.read_text())["mean_r2"]
    assert abs(clean_r2 - 1.0) <= 1e-9

    noisy = synthesize_trace(Traj(), geom, rhythm, noise_sigma=0.002, seed=20)
    noisy_path = tmp_path / "noisy.csv"
    write_trace_csv(noisy, noisy_path)
    noisy_report = tmp_path / "noisy.json"
    assert cli_main(["compare", "--config", str(cfg_path), "--mocap", str(noisy_path),
                     "--out", str(noisy_report)]) == 0
    noisy_r2 = json.loads(noisy_report.read_text())["mean_r2"]
    assert noisy_r2 >= 0.99

    overlay = overlay_path.read_text().splitlines()
    assert overlay[0] == ("time_s,ref_theta_rad,ref_eta_rad,ref_zeta_rad,ref_phi_rad,"
                          "model_theta_rad,model_eta_rad,model_zeta_rad,model_phi_rad")
    assert len(overlay) == len(clean.t) + 1
    elapsed = time.perf_counter() - t0
    _report("8 compare-surrogate", elapsed,
            f"clean mean r2 {clean_r2:.12f}, noisy mean r2 {noisy_r2:.4f}")


def test_criterion_9_byte_determinism(tmp_path):
    cfg_path = tmp_path / "subject.json"
    cfg_path.write_text(json.dumps({"planner": {"alpha_grid_step_deg": 15.0,
                                                "alpha_refine_tol_deg": 0.2}}))
    start_path = tmp_path / "q0.json"
    start_path.write_text(json.dumps({"theta_rad": Q_START.theta, "eta_rad": Q_START.eta,
                                      "zeta_rad": Q_START.zeta, "phi_rad": Q_START.phi}))
    t0 = time.perf_counter()
    outs = []
    for tag, workers in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / f"traj_{tag}.csv"
        cand = tmp_path / f"cand_{tag}.csv"
        assert cli_main(["plan", "--config", str(cfg_path), "--start", str(start_path),
                         "--target", "0.25,0.30,0.25", "--out", str(out),
                         "--candidates", str(cand), "--workers", workers]) == 0
        outs.append((out.read_bytes(), cand.read_bytes()))
    assert outs[0] == outs[1]    # consecutive runs
    assert outs[0] == outs[2]    # concurrent alpha-grid solves
    elapsed = time.perf_counter() - t0
    _report("9 byte-determinism", elapsed, "2 serial runs + 1 threaded run identical")
