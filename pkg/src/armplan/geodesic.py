"""Geodesic initial-value and two-point boundary-value solvers.

The geodesic equation M(q) q'' + C(q, q') q' = 0 is integrated over the
path parameter lambda in [0, 1] with fixed-step classical RK4 (deterministic:
bitwise-reproducible across runs and thread counts).  The boundary-value
problem q(0) = q0, q(1) = q1 is solved by single shooting: damped Newton on
the endpoint residual with a forward-difference Jacobian, plus a metric
homotopy fallback (1-s) I + s M for stiff cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import ArmPlanError, SolverFailure

__all__ = [
    "Metric",
    "CallableMetric",
    "GeodesicProblem",
    "GeodesicPath",
    "NonFinite",
    "NoConvergence",
    "integrate_geodesic",
    "solve_bvp",
    "path_energy",
    "path_length",
]

HOMOTOPY_SCHEDULE = (0.25, 0.5, 0.75, 1.0)
JACOBIAN_STEP = 1e-6
LINESEARCH_MAX_HALVINGS = 20


class NonFinite(ArmPlanError):
    """Integration state left the finite range."""

    def __init__(self, lam: float):
        self.lam = lam
        super().__init__(f"non-finite state at lambda = {lam:.6f}")


class NoConvergence(SolverFailure):
    """Shooting failed on both the direct and homotopy paths."""

    def __init__(self, best_residual: float):
        self.best_residual = best_residual
        super().__init__(f"shooting did not converge (best endpoint residual {best_residual:.3e} rad)")


class Metric:
    """A Riemannian metric the solver can integrate.

    Subclasses provide ``mass(q)`` and ``accel(q, v)``; ``blend(s)`` returns
    the homotopy metric (1-s) I + s M.  ``integrate`` / ``speed_squared``
    are optional fast paths (the arm metric implements them with compiled
    kernels); the defaults here run a plain Python RK4 loop.
    """

    dim: int = 0

    def mass(self, q) -> np.ndarray:
        raise NotImplementedError

    def accel(self, q, v) -> np.ndarray:
        raise NotImplementedError

    def blend(self, s: float) -> "Metric":
        if s == 1.0:
            return self
        return CallableMetric(
            lambda q, base=self, s=s: (1.0 - s) * np.eye(len(np.atleast_1d(q))) + s * base.mass(q),
        )

    def integrate(self, q0: np.ndarray, v0: np.ndarray, n_steps: int):
        """RK4 over lambda in [0,1]; returns (qs, vs, fail_index or -1)."""
        d = q0.shape[0]
        qs = np.empty((n_steps + 1, d))
        vs = np.empty((n_steps + 1, d))
        q = q0.astype(float).copy()
        v = v0.astype(float).copy()
        qs[0] = q
        vs[0] = v
        h = 1.0 / n_steps
        for i in range(n_steps):
            k1v = self.accel(q, v)
            k2q = v + 0.5 * h * k1v
            k2v = self.accel(q + 0.5 * h * v, k2q)
            k3q = v + 0.5 * h * k2v
            k3v = self.accel(q + 0.5 * h * k2q, k3q)
            k4q = v + h * k3v
            k4v = self.accel(q + h * k3q, k4q)
            q = q + h * (v + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
            v = v + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
            qs[i + 1] = q
            vs[i + 1] = v
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
                return qs, vs, i + 1
        return qs, vs, -1

    def speed_squared(self, qs: np.ndarray, vs: np.ndarray) -> np.ndarray:
        n = qs.shape[0]
        out = np.empty(n)
        for i in range(n):
            out[i] = float(vs[i] @ self.mass(qs[i]) @ vs[i])
        return out


class CallableMetric(Metric):
    """Metric defined by a mass-matrix callable.

    If no acceleration callable is supplied, the Christoffel terms are built
    by central finite differences of the mass matrix (h = 1e-6), matching the
    construction used for the arm metric.
    """

    def __init__(self, mass_fn, accel_fn=None, fd_step: float = 1e-6, dim: int | None = None):
        self._mass_fn = mass_fn
        self._accel_fn = accel_fn
        self._h = fd_step
        if dim is not None:
            self.dim = dim

    def mass(self, q) -> np.ndarray:
        return np.asarray(self._mass_fn(np.asarray(q, dtype=float)), dtype=float)

    def accel(self, q, v) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        if self._accel_fn is not None:
            return np.asarray(self._accel_fn(q, v), dtype=float)
        d = q.shape[0]
        dM = np.empty((d, d, d))
        for k in range(d):
            dq = np.zeros(d)
            dq[k] = self._h
            dM[k] = (self.mass(q + dq) - self.mass(q - dq)) / (2.0 * self._h)
        C = 0.5 * (
            np.einsum("kij,k->ij", dM, v)
            + np.einsum("jik,k->ij", dM, v)
            - np.einsum("ijk,k->ij", dM, v)
        )
        return np.linalg.solve(self.mass(q), -C @ v)


@dataclass(frozen=True, eq=False)
class GeodesicProblem:
    """Two-point boundary-value problem for the geodesic equation."""

    metric: Metric
    q0: np.ndarray
    q1: np.ndarray
    n_steps: int = 200
    tol_endpoint: float = 1e-9
    max_newton: int = 50

    def __post_init__(self):
        object.__setattr__(self, "q0", np.asarray(self.q0, dtype=float).copy())
        object.__setattr__(self, "q1", np.asarray(self.q1, dtype=float).copy())
        if self.n_steps < 16:
            raise ValueError("n_steps must be at least 16")
        if not self.tol_endpoint > 0:
            raise ValueError("tol_endpoint must be positive")
        if self.q0.shape != self.q1.shape:
            raise ValueError("q0 and q1 must have the same shape")


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """A sampled geodesic: lambda grid, states, derivatives, energy, length."""

    lambdas: np.ndarray
    qs: np.ndarray
    qdots: np.ndarray
    energy: float
    length: float
    v0: np.ndarray | None = None
    residual: float | None = None
    newton_iterations: int = 0
    richardson_error: float | None = None


def _finish_path(metric: Metric, qs, vs, n_steps, **extra) -> GeodesicPath:
    lambdas = np.linspace(0.0, 1.0, n_steps + 1)
    s2 = np.maximum(metric.speed_squared(qs, vs), 0.0)
    energy = float(simpson(s2, x=lambdas))
    length = float(simpson(np.sqrt(s2), x=lambdas))
    return GeodesicPath(lambdas=lambdas, qs=qs, qdots=vs, energy=energy, length=length, **extra)


def integrate_geodesic(q0, v0, metric: Metric, n_steps: int = 200,
                       richardson: bool = False) -> GeodesicPath:
    """Integrate the geodesic IVP (endpoint unconstrained).

    With ``richardson=True`` the integration is repeated at 2 n_steps and the
    endpoint discrepancy is reported on the path (RK4: expect ~16x reduction
    per doubling).
    """
    q0 = np.asarray(q0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    qs, vs, fail = metric.integrate(q0, v0, n_steps)
    if fail >= 0:
        raise NonFinite(fail / n_steps)
    rich = None
    if richardson:
        qs2, _, fail2 = metric.integrate(q0, v0, 2 * n_steps)
        if fail2 >= 0:
            raise NonFinite(fail2 / (2 * n_steps))
        rich = float(np.max(np.abs(qs2[-1] - qs[-1])))
    return _finish_path(metric, qs, vs, n_steps, richardson_error=rich)


def path_energy(path: GeodesicPath, metric: Metric) -> float:
    """Composite Simpson quadrature of q'^T M(q) q' over the lambda grid."""
    s2 = np.maximum(metric.speed_squared(path.qs, path.qdots), 0.0)
    return float(simpson(s2, x=path.lambdas))


def path_length(path: GeodesicPath, metric: Metric) -> float:
    """Composite Simpson quadrature of sqrt(q'^T M(q) q')."""
    s2 = np.maximum(metric.speed_squared(path.qs, path.qdots), 0.0)
    return float(simpson(np.sqrt(s2), x=path.lambdas))


def _endpoint(metric: Metric, q0, v0, n_steps):
    """Endpoint of the IVP, or None if the state went non-finite."""
    qs, vs, fail = metric.integrate(q0, v0, n_steps)
    if fail >= 0:
        return None, None, None
    return qs[-1], qs, vs


def _newton_shoot(metric: Metric, q0, q1, v0, n_steps, tol, max_newton):
    """Damped-Newton single shooting.  Returns (v, qs, vs, iters, residual, ok)."""
    d = q0.shape[0]
    v = v0.copy()
    end, qs, vs = _endpoint(metric, q0, v, n_steps)
    if end is None:
        return v, None, None, 0, np.inf, False
    r = end - q1
    best = float(np.max(np.abs(r)))
    for it in range(max_newton):
        if np.max(np.abs(r)) < tol:
            return v, qs, vs, it, float(np.max(np.abs(r))), True

        J = np.empty((d, d))
        bad = False
        for k in range(d):
            dv = np.zeros(d)
            dv[k] = JACOBIAN_STEP
            endk, _, _ = _endpoint(metric, q0, v + dv, n_steps)
            if endk is None:
                bad = True
                break
            J[:, k] = (endk - (r + q1)) / JACOBIAN_STEP
        if bad:
            return v, qs, vs, it, best, False
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return v, qs, vs, it, best, False

        # backtracking halving line search on the 2-norm of the residual
        accepted = False
        scale = 1.0
        rnorm = float(np.linalg.norm(r))
        for _ in range(LINESEARCH_MAX_HALVINGS + 1):
            v_try = v + scale * step
            end_try, qs_try, vs_try = _endpoint(metric, q0, v_try, n_steps)
            if end_try is not None:
                r_try = end_try - q1
                if float(np.linalg.norm(r_try)) < rnorm:
                    v, r, qs, vs = v_try, r_try, qs_try, vs_try
                    best = min(best, float(np.max(np.abs(r))))
                    accepted = True
                    break
            scale *= 0.5
        if not accepted:
            return v, qs, vs, it, best, False

    ok = bool(np.max(np.abs(r)) < tol)
    return v, qs, vs, max_newton, float(np.max(np.abs(r))), ok


def _continuation(make_stage, warm_start, q0, q1, n_steps, tol, max_newton):
    """Shared bisecting continuation over a stage ladder in (0, 1].

    ``make_stage(s)`` supplies (metric, stage_target); ``warm_start(v, s_done,
    s)`` maps the last solved shooting velocity to the next stage's guess.
    Returns (v, qs, vs, iters, res) of the s = 1 stage, or None.
    """
    pending = list(HOMOTOPY_SCHEDULE)
    s_done = 0.0
    v = None
    attempts = 0
    final = None
    while pending:
        s = pending[0]
        metric_s, q1_s = make_stage(s)
        guess = (q1_s - q0) if v is None else warm_start(v, s_done, s)
        v_s, qs_s, vs_s, iters, res, ok = _newton_shoot(
            metric_s, q0, q1_s, guess, n_steps, tol, min(max_newton, 15))
        attempts += 1
        if ok:
            v, s_done = v_s, s
            pending.pop(0)
            if s == 1.0:
                final = (v_s, qs_s, vs_s, iters, res)
            continue
        if s - s_done < 1.0 / 64.0 or attempts > 64:
            return None
        pending.insert(0, 0.5 * (s_done + s))
    return final


def solve_bvp(problem: GeodesicProblem) -> GeodesicPath:
    """Solve the geodesic BVP by single shooting with continuation fallbacks.

    The initial guess is the straight-line velocity q1 - q0.  If damped
    Newton fails on the full metric, two bisecting continuations are tried in
    turn, both warm-starting the shooting velocity stage to stage: the metric
    homotopy (1-s) I + s M over the 0.25/0.5/0.75/1.0 ladder, then endpoint
    continuation along the chord q0 + s (q1 - q0) on the full metric (long
    arcs that skirt the metric's sin(theta) degeneracy need the latter).
    Raises NoConvergence with the best residual seen when everything is
    exhausted.
    """
    metric = problem.metric
    q0, q1 = problem.q0, problem.q1
    n, tol, cap = problem.n_steps, problem.tol_endpoint, problem.max_newton

    v, qs, vs, iters, res, ok = _newton_shoot(metric, q0, q1, q1 - q0, n, tol, cap)
    best_res = res if np.isfinite(res) else np.inf

    if not ok:
        final = _continuation(
            lambda s: (metric.blend(s), q1),
            lambda v_, s_done, s: v_,
            q0, q1, n, tol, cap)
        if final is None:
            final = _continuation(
                lambda s: (metric, q0 + s * (q1 - q0)),
                lambda v_, s_done, s: v_ * (s / s_done),
                q0, q1, n, tol, cap)
        if final is None:
            raise NoConvergence(best_res)
        v, qs, vs, iters, res = final

    return _finish_path(metric, qs, vs, problem.n_steps,
                        v0=v, residual=res, newton_iterations=iters)
