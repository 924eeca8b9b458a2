"""Implicit nonlinear operator splitting with singularity-tracking steps.

One step advances U^k to U^{k+1} by solving

    U^{k+1} - U^k + tau_k^2 A F(U^{k+1}) = tau_k A U^{k+1} + tau_k F(U^{k+1})

together with the step rule

    tau_k / delta = min_i min{(1 - U^{k+1}_i) / f(U^{k+1}_i), 1 / f'(U^k_i)},

which couples tau_k to the unknown U^{k+1}. The pair is found by an outer
tau update wrapped around the damped fixed-point form
U^{k+1} = (I - tau A)^{-1} U^k + tau F(U^{k+1}).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from quenchsplit.errors import (
    InvalidArgument,
    NonConvergence,
    SingularityContact,
    StructureViolation,
)
from quenchsplit.linalg import NONNEG_ATOL, TridiagonalOperator, assemble_A, norm_h2, solve_shifted
from quenchsplit.model import Nonlinearity, ProblemSpec, check_admissible

log = logging.getLogger(__name__)

CONTACT_LEVEL = 1.0 - 1e-12
SOFT_SLACK = NONNEG_ATOL
TAU_DECAY_RTOL = 1e-12
MIN_DAMPING = 2.0**-10
ROUNDING_INC = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class MonitorRecord:
    positivity_ok: bool = True
    monotone_ok: bool = True
    bound_ok: bool = True
    residual: float = 0.0
    kappa_ratio: float = 0.0
    lipschitz_level: float = 0.0


@dataclass(frozen=True)
class SplitState:
    k: int
    t: float
    tau_prev: float
    U: np.ndarray
    monitors: MonitorRecord = field(default_factory=MonitorRecord)


@dataclass(frozen=True)
class StepOutcome:
    next: SplitState
    tau_used: float
    inner_iterations: int
    converged: bool


@dataclass
class RunSummary:
    quenched: bool
    quench_time: float | None
    steps: int
    tau0: float | None
    bound_Sigma_tau: float
    status: str
    violations: list[dict] = field(default_factory=list)
    monotone_hypothesis: bool | None = None

    @property
    def hard_violations(self) -> list[dict]:
        return [v for v in self.violations if v["hard"]]

    def to_json(self) -> dict:
        return {
            "quenched": self.quenched,
            "quench_time": self.quench_time,
            "steps": self.steps,
            "tau0": self.tau0,
            "bound_Sigma_tau": self.bound_Sigma_tau,
            "status": self.status,
            "monotone_hypothesis": self.monotone_hypothesis,
            "violations": self.violations,
        }


@dataclass
class Trajectory:
    states: list[SplitState]
    summary: RunSummary
    delta: float
    U0_max: float

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def taus(self) -> np.ndarray:
        """Accepted steps tau_0, tau_1, ... (one fewer than states)."""
        return np.array([s.tau_prev for s in self.states[1:]])

    @property
    def max_U(self) -> np.ndarray:
        return np.array([float(np.max(s.U)) for s in self.states])

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation in time between the bracketing accepted states."""
        times = self.times
        if not (times[0] <= t <= times[-1]):
            raise InvalidArgument(f"t = {t} outside the computed range [{times[0]}, {times[-1]}]")
        j = int(np.searchsorted(times, t, side="right")) - 1
        if j >= len(times) - 1:
            return self.states[-1].U.copy()
        t0, t1 = times[j], times[j + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.states[j].U + w * self.states[j + 1].U

    def bound_margins(self) -> np.ndarray:
        return np.array(
            [sub_unity_bound_from_max(self.U0_max, s.k, self.delta) - float(np.max(s.U)) for s in self.states]
        )


def _check_sub_unity(v: np.ndarray, name: str) -> None:
    if np.any(v >= 1.0) or np.any(~np.isfinite(v)):
        raise InvalidArgument(f"{name} has a component >= 1 (or non-finite)")


def propose_tau(U_current, U_next_guess, f: Nonlinearity, delta: float) -> float:
    """delta * min_i min{(1 - g_i)/f(g_i), 1/f'(c_i)} for guess g and current c."""
    c = np.asarray(U_current, dtype=float)
    g = np.asarray(U_next_guess, dtype=float)
    _check_sub_unity(c, "U_current")
    _check_sub_unity(g, "U_next_guess")
    return _tau_rule(c, g, f, delta)


def _tau_rule(c: np.ndarray, g: np.ndarray, f: Nonlinearity, delta: float) -> float:
    return delta * min(float(np.min((1.0 - g) / f.eval(g))), float(np.min(1.0 / f.deriv(c))))


def eq43_residual(U, V, tau, A: TridiagonalOperator, f: Nonlinearity) -> np.ndarray:
    """Defect of the fully discrete relation at (U^k, U^{k+1}, tau)."""
    FV = f.eval(V)
    return V - U - tau * A.matvec(V) - tau * FV + tau * tau * A.matvec(FV)


def kappa_ratio(U, A: TridiagonalOperator, f: Nonlinearity, weights) -> float:
    """max{||A F(U)||, ||A^2 F(U)||} / ||A^2 U|| in the weighted 2-norm (inf if U's curvature vanishes)."""
    FU = f.eval(U)
    AF = A.matvec(FU)
    num = max(norm_h2(AF, weights), norm_h2(A.matvec(AF), weights))
    den = norm_h2(A.matvec(A.matvec(U)), weights)
    if den == 0.0:
        return math.inf
    return num / den


def splitting_step(
    state: SplitState,
    A: TridiagonalOperator,
    f: Nonlinearity,
    delta: float,
    tol: float = 1e-13,
    max_inner: int = 500,
    *,
    weights=None,
    tau_override: float | None = None,
) -> StepOutcome:
    """Advance one step of the splitting scheme.

    ``tau_override`` pins the step size instead of coupling it to U^{k+1}
    (diagnostic use only). Raises ``SingularityContact`` when an inner iterate
    reaches 1 - 1e-12 and ``NonConvergence`` after ``max_inner`` sweeps.
    """
    if not tol > 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    U = np.asarray(state.U, dtype=float)
    w = np.ones(U.size) if weights is None else np.asarray(weights, dtype=float)
    fixed_tau = tau_override is not None
    V = U.copy()
    tau = float(tau_override) if fixed_tau else _tau_rule(U, V, f, delta)
    omega = 1.0
    prev_inc = math.inf
    converged = False
    it = 0
    while it < max_inner:
        it += 1
        W = solve_shifted(A, tau, U) + tau * f.eval(V)
        V_new = V + omega * (W - V)
        if not np.all(np.isfinite(V_new)) or np.max(V_new) >= CONTACT_LEVEL:
            if omega > MIN_DAMPING and np.max(V) < CONTACT_LEVEL:
                omega *= 0.5
                continue
            raise SingularityContact(f"inner iterate reached u = 1 at step {state.k}")
        inc = float(np.max(np.abs(V_new - V)))
        if inc > prev_inc and omega > MIN_DAMPING:
            omega *= 0.5
        prev_inc = inc
        tau_new = tau if fixed_tau else _tau_rule(U, V_new, f, delta)
        dtau = abs(tau_new - tau)
        V, tau = V_new, tau_new
        # near quench tau ~ (1 - U)^2 amplifies rounding in U; a U-increment at
        # rounding level ends the iteration even if dtau is above tol * tau
        if inc <= tol and (dtau <= tol * tau or inc <= ROUNDING_INC):
            res = norm_h2(eq43_residual(U, V, tau, A, f), w)
            if res <= 10 * tol or inc == 0.0:
                converged = True
                break
    if not converged:
        raise NonConvergence(f"coupled (U, tau) iteration did not converge in {max_inner} sweeps at step {state.k}")

    res = norm_h2(eq43_residual(U, V, tau, A, f), w)
    mon = MonitorRecord(
        positivity_ok=bool(np.min(V) >= 0.0),
        monotone_ok=bool(np.min(V - U) >= 0.0),
        bound_ok=True,
        residual=res,
        kappa_ratio=kappa_ratio(V, A, f, w),
        lipschitz_level=float(np.max(f.lipschitz(U, V))),
    )
    nxt = SplitState(k=state.k + 1, t=state.t + tau, tau_prev=tau, U=V, monitors=mon)
    return StepOutcome(next=nxt, tau_used=tau, inner_iterations=it, converged=True)


def check_monotone_hypothesis(U0, tau0: float, A: TridiagonalOperator, f: Nonlinearity) -> bool:
    """A U0 + F(U0) - tau0 A F(U0) >= 0 componentwise (rounding slack 1e-13)."""
    U0 = np.asarray(U0, dtype=float)
    _check_sub_unity(U0, "U0")
    FU = f.eval(U0)
    expr = A.matvec(U0) + FU - tau0 * A.matvec(FU)
    return bool(np.min(expr) >= -NONNEG_ATOL)


def sub_unity_bound_from_max(U0_max: float, k: int, delta: float) -> float:
    return 1.0 - (1.0 + delta) ** (-k) * (1.0 - U0_max)


def sub_unity_bound(U0, k: int, delta: float) -> float:
    """1 - (1 + delta)^(-k) (1 - max U0): ceiling for max U^k."""
    if k < 0:
        raise InvalidArgument(f"k must be nonnegative, got {k}")
    return sub_unity_bound_from_max(float(np.max(U0)), k, delta)


def quench_time_upper_bound(spec: ProblemSpec) -> float:
    """-(1 - m)/f(m) + (1/ln(1 + delta)) * int_0^1 ds / f(1 - s), m = min U0.

    Can be negative for delta close to 1, in which case it carries no
    information.
    """
    m = float(np.min(spec.U0))
    f_m = float(spec.f.eval(np.array([m]))[0])
    return -(1.0 - m) / f_m + spec.f.inv_f_one_minus_integral(1.0) / math.log1p(spec.delta)


def _violation(k: int, kind: str, margin: float, hard: bool) -> dict:
    return {"step": k, "kind": kind, "margin": margin, "hard": hard}


def run_to_quench(
    spec: ProblemSpec,
    tol: float = 1e-13,
    *,
    max_inner: int = 500,
    max_time: float | None = None,
    steady_tol: float | None = None,
    steady_window: int = 100,
    strict: bool = True,
) -> Trajectory:
    """Iterate the scheme until quench, stagnation, the time budget or max_steps.

    Termination status is one of "singularity-contact", "threshold" (both
    count as quenched), "steady", "budget" or "max_steps". Every accepted
    state is checked for positivity, monotonicity, the sub-unity bound,
    step decay and the discrete defect. With ``strict`` a hard failure
    raises ``StructureViolation`` carrying the partial trajectory; otherwise
    it is only logged in ``summary.violations`` and the run continues.
    """
    problems = check_admissible(spec.f, spec.u0, spec.grid)
    if problems:
        raise InvalidArgument("inadmissible problem: " + "; ".join(problems))
    grid, f, delta = spec.grid, spec.f, spec.delta
    A = assemble_A(grid)
    w = grid.weights
    U0 = spec.U0
    U0_max = float(np.max(U0))

    k0_mon = MonitorRecord(kappa_ratio=kappa_ratio(U0, A, f, w), lipschitz_level=float(np.max(f.lipschitz(U0, U0))))
    states = [SplitState(k=0, t=0.0, tau_prev=1.0, U=U0.copy(), monitors=k0_mon)]
    summary = RunSummary(
        quenched=False,
        quench_time=None,
        steps=0,
        tau0=None,
        bound_Sigma_tau=quench_time_upper_bound(spec),
        status="max_steps",
    )
    traj = Trajectory(states=states, summary=summary, delta=delta, U0_max=U0_max)
    violations = summary.violations
    hypothesis_ok = None
    quiet = 0

    while len(states) - 1 < spec.max_steps:
        cur = states[-1]
        try:
            out = splitting_step(cur, A, f, delta, tol, max_inner, weights=w)
        except SingularityContact:
            summary.quenched = True
            summary.status = "singularity-contact"
            break
        nxt = out.next
        k = nxt.k
        V = nxt.U
        if hypothesis_ok is None:
            summary.tau0 = out.tau_used
            hypothesis_ok = check_monotone_hypothesis(U0, out.tau_used, A, f)
            summary.monotone_hypothesis = hypothesis_ok
            if not hypothesis_ok:
                violations.append(_violation(0, "monotone-hypothesis", 0.0, hard=False))
                log.warning("initial monotonicity hypothesis fails; monotonicity is monitored softly")

        hard = []
        pos_margin = float(np.min(V))
        if pos_margin < 0:
            is_hard = pos_margin < -SOFT_SLACK
            violations.append(_violation(k, "positivity", pos_margin, is_hard))
            if is_hard:
                hard.append("positivity")
            else:
                V = np.maximum(V, 0.0)
        mono_margin = float(np.min(V - cur.U))
        if mono_margin < 0:
            is_hard = mono_margin < -SOFT_SLACK and hypothesis_ok
            violations.append(_violation(k, "monotonicity", mono_margin, bool(is_hard)))
            if is_hard:
                hard.append("monotonicity")
            elif mono_margin >= -SOFT_SLACK:
                V = np.maximum(V, cur.U)
        bound_margin = sub_unity_bound_from_max(U0_max, k, delta) - float(np.max(V))
        if bound_margin < -SOFT_SLACK:
            violations.append(_violation(k, "sub-unity-bound", bound_margin, True))
            hard.append("sub-unity-bound")
        if out.tau_used > cur.tau_prev * (1.0 + TAU_DECAY_RTOL):
            violations.append(_violation(k, "step-decay", cur.tau_prev - out.tau_used, True))
            hard.append("step-decay")
        if nxt.monitors.residual > 10 * tol:
            violations.append(_violation(k, "residual", 10 * tol - nxt.monitors.residual, True))
            hard.append("residual")

        mon = replace(
            nxt.monitors,
            positivity_ok=pos_margin >= -SOFT_SLACK,
            monotone_ok=mono_margin >= -SOFT_SLACK,
            bound_ok=bound_margin >= -SOFT_SLACK,
        )
        nxt = replace(nxt, U=V, monitors=mon)
        states.append(nxt)
        summary.steps = k
        if hard and strict:
            summary.status = "structure-violation"
            raise StructureViolation(f"step {k}: {', '.join(hard)} monitor failed", step=k, trajectory=traj)

        if float(np.max(V)) >= spec.quench_threshold:
            summary.quenched = True
            summary.status = "threshold"
            break
        if max_time is not None and nxt.t >= max_time:
            summary.status = "budget"
            break
        if steady_tol is not None:
            quiet = quiet + 1 if float(np.max(np.abs(V - cur.U))) < steady_tol else 0
            if quiet >= steady_window:
                summary.status = "steady"
                break

    summary.steps = len(states) - 1
    if summary.quenched:
        summary.quench_time = states[-1].t
    return traj
