"""Reference integration of the semidiscrete system dU/dt = A U + F(U).

Classical RK4 under the parabolic step restriction; deliberately shares no
machinery with the splitting scheme so it can serve as its oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import diags

from quenchsplit.errors import IntegrationFailure, InvalidArgument
from quenchsplit.grid import Grid
from quenchsplit.linalg import assemble_A
from quenchsplit.model import DEFAULT_QUENCH_THRESHOLD, ProblemSpec, check_admissible

GROWTH_LIMIT = 1e-2
MAX_HALVINGS = 60


@dataclass(frozen=True)
class OracleConfig:
    """RK4 settings.

    ``stop_time=None`` integrates until the quench threshold is crossed.
    ``output_times`` are hit exactly (the step is clipped onto them);
    ``save_every`` thins the stored checkpoints in between.
    """

    dt_safety: float = 1.0
    stop_time: float | None = None
    quench_threshold: float = DEFAULT_QUENCH_THRESHOLD
    output_times: tuple = ()
    save_every: int = 1
    max_steps: int = 50_000_000

    def __post_init__(self) -> None:
        if not (0 < self.dt_safety <= 1):
            raise InvalidArgument(f"dt_safety must lie in (0, 1], got {self.dt_safety}")
        if self.stop_time is not None and not self.stop_time > 0:
            raise InvalidArgument(f"stop_time must be positive, got {self.stop_time}")
        if not (0 < self.quench_threshold < 1):
            raise InvalidArgument(f"quench_threshold must lie in (0, 1), got {self.quench_threshold}")
        if self.save_every < 1:
            raise InvalidArgument("save_every must be >= 1")


@dataclass
class OracleTrajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), N)
    quenched: bool
    quench_time_estimate: float | None
    rhs: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    quench_threshold: float = DEFAULT_QUENCH_THRESHOLD

    def to_csv_rows(self):
        header = ["t"] + [f"U_{n}" for n in range(1, self.states.shape[1] + 1)] + ["max_U"]
        rows = [[t, *u, float(np.max(u))] for t, u in zip(self.times, self.states)]
        return header, rows


def _hermite(t0, t1, y0, y1, d0, d1, t):
    hstep = t1 - t0
    s = (t - t0) / hstep
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * hstep * d0 + h01 * y1 + h11 * hstep * d1


def base_step(grid: Grid, dt_safety: float) -> float:
    h = grid.h
    return dt_safety * float(np.min(h[:-1] * h[1:])) / 4.0


def integrate_oracle(spec: ProblemSpec, cfg: OracleConfig) -> OracleTrajectory:
    """RK4 on dU/dt = A U + F(U) from U0 until ``stop_time`` or quench.

    The step starts at dt_safety * min(h_{n-1} h_n) / 4 and is halved (the
    step retried) whenever a step would raise some component by more than
    1e-2 (1 - max U), i.e. 1e-2 far from the singularity and a fixed
    fraction of the remaining gap close to it.
    The quench time estimate is the threshold crossing of max U located by
    bisection on the cubic Hermite interpolant of the last step.
    """
    problems = check_admissible(spec.f, spec.u0, spec.grid)
    if problems:
        raise InvalidArgument("inadmissible problem: " + "; ".join(problems))
    A = assemble_A(spec.grid)
    f = spec.f
    thr = cfg.quench_threshold

    def rhs(U):
        return A.matvec(U) + f.eval(U)

    stops = sorted(float(t) for t in cfg.output_times if t > 0)
    if cfg.stop_time is not None:
        stops = [t for t in stops if t < cfg.stop_time] + [float(cfg.stop_time)]
    dt = base_step(spec.grid, cfg.dt_safety)
    t = 0.0
    U = spec.U0.copy()
    times, states = [t], [U.copy()]
    quenched = False
    t_quench = None
    n_steps = 0
    next_stop = 0
    while cfg.stop_time is None or t < cfg.stop_time:
        if n_steps >= cfg.max_steps:
            raise IntegrationFailure(f"oracle exceeded {cfg.max_steps} steps at t = {t}")
        target = stops[next_stop] if next_stop < len(stops) else math.inf
        hit_stop = dt >= target - t
        step = target - t if hit_stop else dt
        for _ in range(MAX_HALVINGS):
            U_new = _rk4(rhs, U, step)
            growth = float(np.max(U_new - U)) if np.all(np.isfinite(U_new)) else math.inf
            # 1e-2 absolute, tightened to 1e-2 of the remaining gap below u = 1
            if growth <= GROWTH_LIMIT * min(1.0, 1.0 - float(np.max(U))) and np.max(U_new) < 1.0:
                break
            dt *= 0.5
            step, hit_stop = dt, False
        else:
            raise IntegrationFailure(f"step halving exhausted at t = {t}")
        if np.min(U_new) < -1e-12:
            raise IntegrationFailure(f"state left [0, 1) at t = {t + step}")
        t_new = target if hit_stop else t + step
        n_steps += 1
        if float(np.max(U_new)) >= thr:
            t_quench = _crossing_time(t, t_new, U, U_new, rhs(U), rhs(U_new), thr)
            times.append(t_new)
            states.append(U_new)
            quenched = True
            break
        if hit_stop:
            next_stop += 1
        if hit_stop or n_steps % cfg.save_every == 0:
            times.append(t_new)
            states.append(U_new.copy())
        t, U = t_new, U_new
    return OracleTrajectory(
        times=np.array(times),
        states=np.array(states),
        quenched=quenched,
        quench_time_estimate=t_quench,
        rhs=rhs,
        quench_threshold=thr,
    )


def _rk4(rhs, U, dt):
    k1 = rhs(U)
    k2 = rhs(U + 0.5 * dt * k1)
    k3 = rhs(U + 0.5 * dt * k2)
    k4 = rhs(U + dt * k3)
    return U + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _crossing_time(t0, t1, U0, U1, d0, d1, thr):
    lo, hi = t0, t1
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.max(_hermite(t0, t1, U0, U1, d0, d1, mid)) >= thr:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def oracle_at(traj: OracleTrajectory, t: float) -> np.ndarray:
    """State at time t by cubic Hermite interpolation between checkpoints."""
    times = traj.times
    if not (times[0] <= t <= times[-1]):
        raise InvalidArgument(f"t = {t} outside stored range [{times[0]}, {times[-1]}]")
    j = int(np.searchsorted(times, t, side="left"))
    if times[j] == t:
        return traj.states[j].copy()
    t0, t1 = times[j - 1], times[j]
    y0, y1 = traj.states[j - 1], traj.states[j]
    return _hermite(t0, t1, y0, y1, traj.rhs(y0), traj.rhs(y1), t)


def integrate_stiff(spec: ProblemSpec, t_eval, rtol: float = 1e-10, atol: float = 1e-13) -> np.ndarray:
    """States at ``t_eval`` from an implicit Radau integration of dU/dt = A U + F(U).

    Used as the fine-grid reference where the explicit RK4 step limit
    (min h_{n-1} h_n / 4) is prohibitive, e.g. on strongly graded meshes.
    Raises ``IntegrationFailure`` if the solver stops early (typically
    because the state reached the quench singularity before max(t_eval)).
    """
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    if t_eval.size == 0 or np.any(t_eval <= 0) or np.any(np.diff(t_eval) <= 0):
        raise InvalidArgument("t_eval must be increasing positive times")
    A = assemble_A(spec.grid)
    f = spec.f
    lap = diags([A.sub, A.diag, A.sup], [-1, 0, 1], format="csc")

    def rhs(_t, U):
        return A.matvec(U) + f.eval(U)

    def jac(_t, U):
        return lap + diags(f.deriv(U), 0, format="csc")

    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), spec.U0, method="Radau", t_eval=t_eval,
                    rtol=rtol, atol=atol, jac=jac)
    if sol.status != 0 or sol.y.shape[1] != t_eval.size:
        raise IntegrationFailure(f"stiff reference integration failed: {sol.message}")
    if np.max(sol.y) >= 1.0:
        raise IntegrationFailure("stiff reference reached u = 1")
    return sol.y.T.copy()


def truncation_probe(u_exact: Callable, grid: Grid, t: float, u_xx: Callable) -> np.ndarray:
    """Central-difference second derivative of u(t, .) minus the exact u_xx(t, .).

    Boundary values are read from ``u_exact``, so functions that do not
    vanish at +-a are handled; for ones that do, the difference part is
    exactly A applied to the interior samples.
    """
    x = grid.x
    u = np.asarray(u_exact(t, x), dtype=float)
    h = grid.h
    hl, hr = h[:-1], h[1:]
    approx = 2.0 * (u[:-2] / (hl * (hl + hr)) - u[1:-1] / (hl * hr) + u[2:] / (hr * (hl + hr)))
    return approx - np.asarray(u_xx(t, x[1:-1]), dtype=float)
