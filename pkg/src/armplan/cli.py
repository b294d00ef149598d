"""Command-line front end.

Subcommands: plan, sweep, rhythm, ik, fk, compare.  All file outputs are
deterministic for identical inputs: CSV values are written with 17
significant digits (lossless round trip) and LF line endings.  Exit codes:
0 success, 1 configuration/input errors (with line-numbered messages where
available), 2 solver failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .config import SubjectConfig, load_subject_config
from .errors import ArmPlanError, ConfigError, SolverFailure
from .exomap import load_description, map_trajectory
from .kinematics import ArmConfiguration, forward_kinematics, inverse_kinematics
from .mocap import compute_r2, mocap_to_angles, read_trace_csv
from .planner import PlanRequest, plan, sweep_alpha
from .rhythm import eval_rhythm

TRAJ_HEADER = "time_s,theta_rad,eta_rad,zeta_rad,phi_rad"
EXO_HEADER = ",exo_q1_rad,exo_q2_rad,exo_q3_rad,exo_q4_rad"
CAND_HEADER = "alpha_rad,feasible,energy,fail_reason"
RHYTHM_HEADER = "theta_deg,phi_ed_deg,phi_pr_deg,d_sg_m,x_m,y_m,z_m"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path, lines):
    with open(path, "w", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _parse_target(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--target expects 'x,y,z' in meters, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ConfigError(f"--target expects numbers, got {text!r}") from None


def _start_from_doc(doc: dict):
    """A start is either a full configuration or wrist position + swivel angle."""
    if not isinstance(doc, dict):
        raise ConfigError("start file must be a JSON object")
    angle_keys = {"theta_rad", "eta_rad", "zeta_rad", "phi_rad"}
    if angle_keys <= set(doc):
        q = ArmConfiguration(doc["theta_rad"], doc["eta_rad"], doc["zeta_rad"], doc["phi_rad"])
        return {"q_start": q}
    if {"wrist_m", "alpha_rad"} <= set(doc):
        return {"start_wrist": np.asarray(doc["wrist_m"], dtype=float),
                "start_alpha": float(doc["alpha_rad"])}
    raise ConfigError(
        "start file needs either theta_rad/eta_rad/zeta_rad/phi_rad or wrist_m + alpha_rad")


def _config_from_args(args) -> SubjectConfig:
    if getattr(args, "config", None):
        return load_subject_config(args.config)
    return SubjectConfig()


def _request(cfg: SubjectConfig, start_kwargs: dict, target: np.ndarray) -> PlanRequest:
    p = cfg.planner
    return PlanRequest(x_f=target, alpha_grid_step=p.alpha_grid_step,
                       alpha_refine_tol=p.alpha_refine_tol, duration=p.duration,
                       n_samples=p.n_samples, **start_kwargs)


def _plan_kwargs(cfg: SubjectConfig, workers: int) -> dict:
    from .dynamics import ArmMetric

    metric = ArmMetric(cfg.links, cfg.geom, cfg.rhythm,
                       couple_shoulder=cfg.dynamics.couple_shoulder,
                       reg=cfg.dynamics.regularization, fd_step=cfg.dynamics.fd_step)
    return dict(metric=metric, n_steps=cfg.solver.n_steps,
                tol_endpoint=cfg.solver.tol_endpoint, max_newton=cfg.solver.max_newton,
                workers=workers)


def _candidate_lines(candidates):
    yield CAND_HEADER
    for c in candidates:
        energy = "" if c.energy is None else _fmt(c.energy)
        reason = c.fail_reason or ""
        yield f"{_fmt(c.alpha)},{int(c.feasible)},{energy},{reason}"


def _write_candidates(path, candidates):
    _write_lines(path, _candidate_lines(candidates))


def cmd_plan(args) -> int:
    cfg = _config_from_args(args)
    start = _start_from_doc(_load_json(args.start))
    request = _request(cfg, start, _parse_target(args.target))
    desc = load_description(args.exo) if args.exo else None

    try:
        result = plan(request, cfg.geom, cfg.links, cfg.rhythm, **_plan_kwargs(cfg, args.workers))
    except SolverFailure as exc:
        candidates = getattr(exc, "candidates", None)
        if candidates is not None:
            cand_path = args.candidates or str(Path(args.out).with_suffix(".candidates.csv"))
            _write_candidates(cand_path, candidates)
            print(f"candidate table written to {cand_path}", file=sys.stderr)
        raise

    traj = result.trajectory
    exo = map_trajectory(traj, desc) if desc is not None else None

    lines = [TRAJ_HEADER + (EXO_HEADER if exo is not None else "")]
    for i in range(len(traj.t)):
        row = [traj.t[i], *traj.q[i]]
        if exo is not None:
            row.extend(exo.q[i])
        lines.append(",".join(_fmt(v) for v in row))
    _write_lines(args.out, lines)

    if args.candidates:
        _write_candidates(args.candidates, result.candidates)
    print(f"alpha* = {result.alpha_star:.6f} rad, energy = {result.energy_star:.9g}, "
          f"trajectory written to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    start = _start_from_doc(_load_json(args.start))
    request = _request(cfg, start, _parse_target(args.target))
    candidates = sweep_alpha(request, cfg.geom, cfg.links, cfg.rhythm,
                             **_plan_kwargs(cfg, args.workers))
    _write_candidates(args.out, candidates)
    print(f"{len(candidates)} candidates written to {args.out}")
    return 0


def cmd_rhythm(args) -> int:
    cfg = _config_from_args(args)
    if args.step <= 0:
        raise ConfigError("--step must be positive")
    thetas = np.arange(args.min, args.max + 0.5 * args.step, args.step)
    lines = [RHYTHM_HEADER]
    for theta in thetas:
        st = eval_rhythm(float(theta), cfg.rhythm)
        row = [st.theta, st.phi_ed, st.phi_pr, st.d_sg, *st.x_sh]
        lines.append(",".join(_fmt(v) for v in row))
    if args.out:
        _write_lines(args.out, lines)
        print(f"{len(thetas)} rows written to {args.out}")
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_fk(args) -> int:
    cfg = _config_from_args(args)
    doc = json.loads(sys.stdin.read())
    q = ArmConfiguration(doc["theta_rad"], doc["eta_rad"], doc["zeta_rad"], doc["phi_rad"])
    pose = forward_kinematics(q, cfg.geom, cfg.rhythm)
    json.dump({"x_sh_m": list(pose.x_sh), "x_e_m": list(pose.x_e), "x_w_m": list(pose.x_w)},
              sys.stdout)
    sys.stdout.write("\n")
    return 0


def cmd_ik(args) -> int:
    cfg = _config_from_args(args)
    doc = json.loads(sys.stdin.read())
    res = inverse_kinematics(np.asarray(doc["x_e_m"], dtype=float),
                             np.asarray(doc["x_w_m"], dtype=float), cfg.geom, cfg.rhythm)
    json.dump({"theta_rad": res.q.theta, "eta_rad": res.q.eta, "zeta_rad": res.q.zeta,
               "phi_rad": res.q.phi, "degenerate_eta": bool(res.degenerate_eta)}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def cmd_compare(args) -> int:
    cfg = _config_from_args(args)
    trace = read_trace_csv(args.mocap)
    if len(trace) < 2:
        raise ConfigError(f"{args.mocap}: need at least 2 frames to compare")
    reference = mocap_to_angles(trace, cfg.geom)

    q_start = ArmConfiguration.from_array(reference.q[0])
    duration = float(trace.t[-1] - trace.t[0])
    request = PlanRequest(
        x_f=trace.wrist[-1], q_start=q_start,
        alpha_grid_step=cfg.planner.alpha_grid_step,
        alpha_refine_tol=cfg.planner.alpha_refine_tol,
        duration=duration, n_samples=max(cfg.planner.n_samples, len(trace)),
    )
    result = plan(request, cfg.geom, cfg.links, cfg.rhythm, **_plan_kwargs(cfg, args.workers))

    traj = result.trajectory
    model_t = traj.t + trace.t[0]
    model_on_ref = CubicSpline(model_t, traj.q, axis=0)(reference.t)
    report = compute_r2(model_on_ref, reference.q)

    doc = {
        "mocap": str(args.mocap),
        "n_frames": len(trace),
        "duration_s": duration,
        "alpha_star_rad": result.alpha_star,
        "energy_star": result.energy_star,
        "r2": {name: report.per_dof[i] for i, name in
               enumerate(("theta", "eta", "zeta", "phi"))},
        "mean_r2": report.mean,
        "notes": list(report.notes),
    }
    with open(args.out, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if args.overlay:
        lines = ["time_s,ref_theta_rad,ref_eta_rad,ref_zeta_rad,ref_phi_rad,"
                 "model_theta_rad,model_eta_rad,model_zeta_rad,model_phi_rad"]
        for i in range(len(reference.t)):
            row = [reference.t[i], *reference.q[i], *model_on_ref[i]]
            lines.append(",".join(_fmt(v) for v in row))
        _write_lines(args.overlay, lines)

    print(f"mean r^2 = {report.mean:.6f}, report written to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armplan",
        description="Plan human-like arm reference trajectories (geodesics in the "
                    "arm inertia metric with a moving GH center).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, workers=False):
        p.add_argument("--config", help="subject JSON (defaults used when omitted)")
        if workers:
            p.add_argument("--workers", type=int, default=1,
                           help="threads for the swivel-grid solves (output-identical)")

    p = sub.add_parser("plan", help="plan a reference trajectory to a wrist target")
    add_common(p, workers=True)
    p.add_argument("--start", required=True, help="start JSON (configuration or wrist+alpha)")
    p.add_argument("--target", required=True, help="wrist target 'x,y,z' in meters")
    p.add_argument("--exo", help="exoskeleton description JSON (path or shipped name)")
    p.add_argument("--out", required=True, help="trajectory CSV path")
    p.add_argument("--candidates", help="also write the swivel candidate table CSV")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="evaluate the swivel grid, emit the energy-vs-alpha table")
    add_common(p, workers=True)
    p.add_argument("--start", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True, help="candidate CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rhythm", help="tabulate the GH-center rhythm model over elevation")
    add_common(p)
    p.add_argument("--min", type=float, default=0.0, help="lowest elevation, degrees")
    p.add_argument("--max", type=float, default=180.0, help="highest elevation, degrees")
    p.add_argument("--step", type=float, default=1.0, help="grid step, degrees")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_rhythm)

    p = sub.add_parser("fk", help="forward kinematics: configuration JSON on stdin -> pose JSON")
    add_common(p)
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("ik", help="inverse kinematics: pose JSON on stdin -> configuration JSON")
    add_common(p)
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("compare", help="plan between a mocap trace's endpoints and report r^2")
    add_common(p, workers=True)
    p.add_argument("--mocap", required=True, help="mocap trace CSV")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--overlay", help="also write overlaid reference/model angle CSV")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ArmPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
