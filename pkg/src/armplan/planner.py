"""End-to-end reference generation.

For a wrist target, the redundant family of final configurations q(alpha)
is enumerated over a swivel-angle grid, a geodesic is solved per feasible
candidate, the minimum-energy member is refined by golden-section search,
and the winning spatial path is time-parameterized with a minimum-jerk
profile.  All stages are deterministic: fixed grid, deterministic
tie-breaks, fixed-step integration; the per-candidate solves are
independent and may run on a thread pool without changing any output bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .dynamics import ArmMetric, LinkParams
from .errors import SolverFailure
from .geodesic import GeodesicPath, GeodesicProblem, Metric, NoConvergence, solve_bvp
from .kinematics import (
    ArmConfiguration,
    ArmGeometry,
    LimitViolation,
    NonConvergent,
    Unreachable,
    check_limits,
    final_configuration,
    swivel_angle_of,
)
from .rhythm import RhythmParams

__all__ = [
    "PlanRequest",
    "Candidate",
    "Trajectory",
    "PlanResult",
    "NoFeasibleAlpha",
    "AllSolvesFailed",
    "plan",
    "sweep_alpha",
    "time_parameterize",
]

MIN_SIN_THETA = 0.05
ENERGY_TIE_REL = 1e-9
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoFeasibleAlpha(SolverFailure):
    """Every swivel-grid candidate was unreachable or limit-violating."""

    def __init__(self, candidates):
        self.candidates = tuple(candidates)
        super().__init__("no feasible final configuration on the swivel-angle grid")


class AllSolvesFailed(SolverFailure):
    """Feasible final configurations exist but no geodesic solve converged."""

    def __init__(self, candidates):
        self.candidates = tuple(candidates)
        super().__init__("no geodesic solve converged on any feasible swivel candidate")


@dataclass(frozen=True, eq=False)
class PlanRequest:
    """A point-to-point reference request.

    The start is either a full configuration or a wrist position plus start
    swivel angle (resolved through the redundancy circle); only the final
    swivel angle is optimized.
    """

    x_f: np.ndarray
    q_start: ArmConfiguration | None = None
    start_wrist: np.ndarray | None = None
    start_alpha: float | None = None
    alpha_grid_step: float = math.radians(5.0)
    alpha_refine_tol: float = math.radians(0.1)
    duration: float = 2.0
    n_samples: int = 200

    def __post_init__(self):
        object.__setattr__(self, "x_f", np.asarray(self.x_f, dtype=float).reshape(3).copy())
        if self.q_start is None and (self.start_wrist is None or self.start_alpha is None):
            raise ValueError("provide q_start, or start_wrist together with start_alpha")
        if self.start_wrist is not None:
            object.__setattr__(self, "start_wrist",
                               np.asarray(self.start_wrist, dtype=float).reshape(3).copy())
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not (self.alpha_grid_step > self.alpha_refine_tol > 0):
            raise ValueError("require alpha_grid_step > alpha_refine_tol > 0")
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")


@dataclass(frozen=True)
class Candidate:
    """One row of the swivel-grid diagnostic table."""

    alpha: float
    feasible: bool
    energy: float | None
    fail_reason: str | None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped joint trajectory: positions, velocities, accelerations."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray


@dataclass(frozen=True, eq=False)
class PlanResult:
    alpha_star: float
    q_final: ArmConfiguration
    geodesic: GeodesicPath
    trajectory: Trajectory
    energy_star: float
    candidates: tuple[Candidate, ...]


def _alpha_grid(step: float) -> np.ndarray:
    """Grid over (-pi, pi] with the given spacing, endpoint included."""
    m = int(round(2.0 * math.pi / step))
    return -math.pi + step * np.arange(1, m + 1)


def _wrap_pi(a: float) -> float:
    return math.pi - (math.pi - a) % (2.0 * math.pi)


def _resolve_start(request: PlanRequest, geom: ArmGeometry, rhythm: RhythmParams) -> ArmConfiguration:
    if request.q_start is not None:
        q = request.q_start
    else:
        q = final_configuration(request.start_wrist, request.start_alpha, geom, rhythm)
    verdict = check_limits(q, geom)
    if not verdict.feasible:
        raise LimitViolation(verdict.violations)
    if math.sin(q.theta) < MIN_SIN_THETA:
        raise ValueError(
            f"start elevation too close to the metric degeneracy (sin theta = {math.sin(q.theta):.4f})")
    return q


def _evaluate_alpha(alpha, request, geom, rhythm, metric, q_start_arr, n_steps, tol_endpoint, max_newton):
    """Solve one swivel candidate; returns (Candidate, q_final, path)."""
    try:
        q_final = final_configuration(request.x_f, float(alpha), geom, rhythm)
    except Unreachable:
        return Candidate(float(alpha), False, None, "unreachable"), None, None
    except NonConvergent:
        return Candidate(float(alpha), False, None, "ik_nonconvergent"), None, None
    except LimitViolation as exc:
        return Candidate(float(alpha), False, None, "limits:" + ",".join(exc.violations)), None, None
    if math.sin(q_final.theta) < MIN_SIN_THETA:
        return Candidate(float(alpha), False, None, "degenerate"), None, None

    problem = GeodesicProblem(metric=metric, q0=q_start_arr, q1=q_final.as_array(),
                              n_steps=n_steps, tol_endpoint=tol_endpoint, max_newton=max_newton)
    try:
        path = solve_bvp(problem)
    except NoConvergence:
        return Candidate(float(alpha), True, None, "bvp_no_convergence"), None, None
    return Candidate(float(alpha), True, path.energy, None), q_final, path


def _run_grid(request, geom, rhythm, metric, q_start_arr, n_steps, tol_endpoint, max_newton, workers):
    alphas = _alpha_grid(request.alpha_grid_step)

    def job(a):
        return _evaluate_alpha(a, request, geom, rhythm, metric, q_start_arr,
                               n_steps, tol_endpoint, max_newton)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, alphas))
    else:
        results = [job(a) for a in alphas]
    return results


def sweep_alpha(request: PlanRequest, geom: ArmGeometry, links: LinkParams, rhythm: RhythmParams,
                *, metric: Metric | None = None, n_steps: int = 200, tol_endpoint: float = 1e-9,
                max_newton: int = 50, workers: int = 1) -> tuple[Candidate, ...]:
    """Evaluate the full swivel grid and return the diagnostic table only."""
    q_start = _resolve_start(request, geom, rhythm)
    if metric is None:
        metric = ArmMetric(links, geom, rhythm)
    results = _run_grid(request, geom, rhythm, metric, q_start.as_array(),
                        n_steps, tol_endpoint, max_newton, workers)
    return tuple(cand for cand, _, _ in results)


def plan(request: PlanRequest, geom: ArmGeometry, links: LinkParams, rhythm: RhythmParams,
         *, metric: Metric | None = None, n_steps: int = 200, tol_endpoint: float = 1e-9,
         max_newton: int = 50, workers: int = 1) -> PlanResult:
    """Plan a minimum-energy geodesic reference to the wrist target.

    Raises NoFeasibleAlpha / AllSolvesFailed (both carry the candidate table
    for diagnostics) when the swivel grid yields nothing solvable.
    """
    q_start = _resolve_start(request, geom, rhythm)
    q_start_arr = q_start.as_array()
    if metric is None:
        metric = ArmMetric(links, geom, rhythm)

    results = _run_grid(request, geom, rhythm, metric, q_start_arr,
                        n_steps, tol_endpoint, max_newton, workers)
    candidates = tuple(cand for cand, _, _ in results)

    solved = [(cand, qf, path) for cand, qf, path in results if cand.energy is not None]
    if not solved:
        if any(cand.feasible for cand in candidates):
            raise AllSolvesFailed(candidates)
        raise NoFeasibleAlpha(candidates)

    # coarse winner with the deterministic tie-break: equal energies within
    # 1e-9 relative -> smaller |alpha|, then smaller alpha
    e_min = min(c.energy for c, _, _ in solved)
    tol = ENERGY_TIE_REL * abs(e_min)
    tied = [entry for entry in solved if entry[0].energy <= e_min + tol]
    best_cand, best_q, best_path = min(tied, key=lambda e: (abs(e[0].alpha), e[0].alpha))
    best = {"alpha": best_cand.alpha, "energy": best_cand.energy,
            "q_final": best_q, "path": best_path}

    def probe(alpha: float) -> float:
        cand, qf, path = _evaluate_alpha(alpha, request, geom, rhythm, metric, q_start_arr,
                                         n_steps, tol_endpoint, max_newton)
        if cand.energy is None:
            return math.inf
        if cand.energy < best["energy"]:
            best.update(alpha=cand.alpha, energy=cand.energy, q_final=qf, path=path)
        return cand.energy

    # golden-section refinement between the bracketing grid neighbors
    a = best_cand.alpha - request.alpha_grid_step
    b = best_cand.alpha + request.alpha_grid_step
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = probe(c), probe(d)
    while (b - a) > request.alpha_refine_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = probe(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = probe(d)

    energies = [c.energy for c in candidates if c.energy is not None]
    assert best["energy"] <= min(energies), "argmin certificate violated"

    trajectory = time_parameterize(best["path"], request.duration, request.n_samples)
    return PlanResult(
        alpha_star=_wrap_pi(best["alpha"]),
        q_final=best["q_final"],
        geodesic=best["path"],
        trajectory=trajectory,
        energy_star=best["energy"],
        candidates=candidates,
    )


def time_parameterize(path: GeodesicPath, duration: float, n_samples: int = 200) -> Trajectory:
    """Map the spatial path onto time with the minimum-jerk profile.

    s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 re-parameterizes lambda; positions
    come from a cubic spline of the path samples, velocities/accelerations
    from the chain rule, so q' and q'' vanish at both ends.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    t = np.linspace(0.0, duration, n_samples)
    tau = t / duration
    s = ((6.0 * tau - 15.0) * tau + 10.0) * tau**3
    sd = ((30.0 * tau - 60.0) * tau + 30.0) * tau**2 / duration
    sdd = ((120.0 * tau - 180.0) * tau + 60.0) * tau / duration**2

    pos = CubicSpline(path.lambdas, path.qs, axis=0)
    vel = CubicSpline(path.lambdas, path.qdots, axis=0)
    q = pos(s)
    qp = vel(s)
    qpp = vel(s, 1)
    qd = qp * sd[:, None]
    qdd = qpp * (sd**2)[:, None] + qp * sdd[:, None]
    return Trajectory(t=t, q=q, qd=qd, qdd=qdd)
