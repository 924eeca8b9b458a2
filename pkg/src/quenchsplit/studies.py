"""Convergence studies, critical half-width bisection and the linalg validation suite."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from quenchsplit.errors import (
    Inconclusive,
    IntegrationFailure,
    InvalidArgument,
    InvalidBracket,
)
from quenchsplit.grid import Grid, build_graded, build_uniform
from quenchsplit.linalg import (
    DENSE_EXPM_MAX_N,
    NONNEG_ATOL,
    TridiagonalOperator,
    assemble_A,
    dense_expm,
    log_norm_2,
    log_norm_limit_probe,
    norm_h2,
    resolvent,
    solve_shifted,
    symmetrized,
)
from quenchsplit.model import InitialCondition, Nonlinearity, ProblemSpec, zero_initial
from quenchsplit.semidiscrete import (
    OracleConfig,
    base_step,
    integrate_oracle,
    integrate_stiff,
    oracle_at,
)
from quenchsplit.splitting import run_to_quench

log = logging.getLogger(__name__)

MIN_LEVELS = 3
# RK4 references needing more steps than this switch to the implicit integrator
RK4_STEP_BUDGET = 5_000_000
STEADY_TOL = 1e-10
STEADY_WINDOW = 100
CONTRACTION_SLACK = 1e-10
LOG_NORM_AGREEMENT = 1e-6


# ---------------------------------------------------------------- order reports


@dataclass(frozen=True)
class OrderReport:
    """Errors against resolution with pairwise and least-squares orders.

    ``observed_orders[j]`` compares levels j and j+1 and is ``None`` when the
    pair is degenerate (equal resolutions or a non-positive error); any
    degenerate pair also leaves ``summary_order`` as ``None``.
    """

    kind: str
    levels: list
    observed_orders: list
    summary_order: float | None
    degenerate: bool
    details: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "levels": [{"resolution": r, "error": e} for r, e in self.levels],
            "observed_orders": list(self.observed_orders),
            "summary_order": self.summary_order,
            "degenerate": self.degenerate,
            "details": self.details,
        }


def order_report(levels, kind: str = "", details=None) -> OrderReport:
    levels = [(float(r), float(e)) for r, e in levels]
    if len(levels) < 2:
        raise InvalidArgument("need at least two levels to estimate an order")
    if any(not (math.isfinite(r) and r > 0) for r, _ in levels):
        raise InvalidArgument("resolutions must be positive and finite")
    if any(not math.isfinite(e) or e < 0 for _, e in levels):
        raise InvalidArgument("errors must be finite and nonnegative")
    orders = []
    for (r0, e0), (r1, e1) in zip(levels, levels[1:]):
        if r0 == r1 or e0 <= 0 or e1 <= 0:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(r0 / r1))
    degenerate = any(o is None for o in orders)
    summary = None
    if not degenerate:
        logr = np.log([r for r, _ in levels])
        loge = np.log([e for _, e in levels])
        summary = float(np.polyfit(logr, loge, 1)[0])
    return OrderReport(kind, levels, orders, summary, degenerate, list(details or []))


# ---------------------------------------------------------------- temporal order


def converge_time(
    spec: ProblemSpec,
    t_star: float,
    levels: int = 4,
    *,
    oracle_dt_safety: float = 0.05,
    tol: float = 1e-13,
) -> OrderReport:
    """Error at ``t_star`` of the scheme with delta, delta/2, ... against RK4.

    The scheme state at t_star is linearly interpolated between accepted
    steps. Monitors run non-strictly so that a structure warning does not
    abort the study; their counts are kept in ``details``.
    """
    if int(levels) != levels or levels < MIN_LEVELS:
        raise InvalidArgument(f"need at least {MIN_LEVELS} levels, got {levels}")
    if not t_star > 0:
        raise InvalidArgument(f"t_star must be positive, got {t_star}")
    cfg = OracleConfig(
        dt_safety=oracle_dt_safety,
        stop_time=t_star,
        quench_threshold=spec.quench_threshold,
        save_every=1 << 62,
    )
    ref = integrate_oracle(spec, cfg)
    if ref.quenched:
        raise InvalidArgument(
            f"t_star = {t_star} is beyond the oracle quench estimate {ref.quench_time_estimate:.6g}"
        )
    U_ref = oracle_at(ref, t_star)
    w = spec.grid.weights
    rows, details = [], []
    for j in range(int(levels)):
        delta = spec.delta / 2**j
        traj = run_to_quench(spec.replace(delta=delta), tol, max_time=t_star, strict=False)
        _require_reached(traj, t_star)
        err = norm_h2(traj.state_at(t_star) - U_ref, w)
        rows.append((delta, err))
        details.append(
            {
                "delta": delta,
                "tau0": traj.summary.tau0,
                "steps": traj.summary.steps,
                "hard_violations": len(traj.summary.hard_violations),
                "error": err,
            }
        )
        log.info("converge-time delta=%g error=%.3e", delta, err)
    return order_report(rows, "time", details)


def _require_reached(traj, t_star: float) -> None:
    if traj.states[-1].t < t_star:
        raise InvalidArgument(
            f"the scheme stopped ({traj.summary.status}) at t = {traj.states[-1].t:.6g} before t_star = {t_star}"
        )


# ---------------------------------------------------------------- spatial order


def _grid_builder(spec: ProblemSpec) -> Callable[[int], Grid]:
    kind = spec.grid_kind.get("kind", "explicit")
    a = spec.grid.a
    if kind == "uniform":
        return lambda N: build_uniform(a, N)
    if kind == "graded":
        g = float(spec.grid_kind.get("grading", 1.0))
        return lambda N: build_graded(a, N, g)
    raise InvalidArgument(f"spatial refinement needs a uniform or graded grid family, got {kind!r}")


def _reference_state(spec: ProblemSpec, t_star: float, method: str, dt_safety: float) -> tuple[np.ndarray, str]:
    if method == "auto":
        n_steps = t_star / base_step(spec.grid, dt_safety)
        method = "rk4" if n_steps <= RK4_STEP_BUDGET else "stiff"
    if method == "rk4":
        cfg = OracleConfig(dt_safety=dt_safety, stop_time=t_star, quench_threshold=spec.quench_threshold,
                           save_every=1 << 62)
        traj = integrate_oracle(spec, cfg)
        if traj.quenched:
            raise InvalidArgument(f"t_star = {t_star} is beyond the reference quench time")
        return oracle_at(traj, t_star), method
    if method == "stiff":
        try:
            return integrate_stiff(spec, [t_star])[0], method
        except IntegrationFailure as exc:
            raise InvalidArgument(f"reference run did not reach t_star = {t_star}: {exc}") from None
    raise InvalidArgument(f"unknown reference method {method!r}")


def converge_space(
    spec: ProblemSpec,
    t_star: float,
    levels: int = 4,
    *,
    delta: float = 5e-4,
    richardson: bool = True,
    ref_factor: int = 4,
    reference: str = "auto",
    oracle_dt_safety: float = 1.0,
    tol: float = 1e-13,
) -> OrderReport:
    """Error at ``t_star`` under mesh doubling, against a refined semidiscrete reference.

    Level j uses N_j = (N_0 + 1) 2^j - 1 nodes of the spec's grid family
    (uniform or graded), so every coarse node is also a reference node and
    errors are taken at coincident nodes. The reference grid has
    ``ref_factor`` times as many intervals as the finest level.

    The O(delta) temporal error is removed by Richardson extrapolation
    2 U(delta/2) - U(delta), leaving an O(delta^2) remainder far below the
    spatial signal; ``richardson=False`` uses U(delta) alone.
    """
    if int(levels) != levels or levels < MIN_LEVELS:
        raise InvalidArgument(f"need at least {MIN_LEVELS} levels, got {levels}")
    if not t_star > 0:
        raise InvalidArgument(f"t_star must be positive, got {t_star}")
    if int(ref_factor) != ref_factor or ref_factor < 1:
        raise InvalidArgument(f"ref_factor must be a positive integer, got {ref_factor}")
    build = _grid_builder(spec)
    N0 = spec.grid.N
    Ns = [(N0 + 1) * 2**j - 1 for j in range(int(levels))]
    N_ref = (Ns[-1] + 1) * int(ref_factor) - 1
    ref_grid = build(N_ref)
    U_ref, method = _reference_state(spec.replace(grid=ref_grid), t_star, reference, oracle_dt_safety)

    rows, details = [], []
    for N in Ns:
        grid = build(N)
        stride = (N_ref + 1) // (N + 1)
        if not np.allclose(ref_grid.x[::stride], grid.x, rtol=0, atol=1e-12 * grid.a):
            raise InvalidArgument(f"grid with N = {N} is not nested in the reference grid")
        U_c = ref_grid_restrict(U_ref, stride)
        U = _scheme_at(spec.replace(grid=grid, delta=delta), t_star, tol)
        if richardson:
            U = 2.0 * _scheme_at(spec.replace(grid=grid, delta=delta / 2), t_star, tol) - U
        err = norm_h2(U - U_c, grid.weights)
        hmax = float(np.max(grid.h))
        rows.append((hmax, err))
        details.append({"N": N, "h_max": hmax, "error": err})
        log.info("converge-space N=%d error=%.3e", N, err)
    details.append({"reference_N": N_ref, "reference_method": method, "delta": delta, "richardson": richardson})
    return order_report(rows, "space", details)


def ref_grid_restrict(U_ref: np.ndarray, stride: int) -> np.ndarray:
    """Interior reference values at the nodes of a grid with ``stride`` times wider intervals."""
    return U_ref[stride - 1 :: stride]


def _scheme_at(spec: ProblemSpec, t_star: float, tol: float) -> np.ndarray:
    traj = run_to_quench(spec.replace(max_steps=10**8), tol, max_time=t_star, strict=False)
    _require_reached(traj, t_star)
    return traj.state_at(t_star)


# ---------------------------------------------------------------- critical half-width


@dataclass
class CriticalAResult:
    a_star: float
    bracket: tuple
    history: list

    def to_json(self) -> dict:
        return {"a_star": self.a_star, "bracket": list(self.bracket), "history": self.history}


def classify_half_width(
    f: Nonlinearity,
    a: float,
    N: int,
    budget_time: float,
    *,
    delta: float = 0.005,
    grading: float = 1.0,
    initial: Callable[[float], InitialCondition] = zero_initial,
    steady_tol: float = STEADY_TOL,
    steady_window: int = STEADY_WINDOW,
) -> dict:
    """Run the scheme on [-a, a]; label the outcome "quench", "steady" or "inconclusive"."""
    grid = build_graded(a, N, grading)
    spec = ProblemSpec(grid, f, initial(a), delta, max_steps=10**9)
    traj = run_to_quench(spec, max_time=budget_time, steady_tol=steady_tol, steady_window=steady_window, strict=False)
    s = traj.summary
    if s.quenched:
        label = "quench"
    elif s.status == "steady":
        label = "steady"
    else:
        label = "inconclusive"
    return {"a": float(a), "outcome": label, "status": s.status, "t_end": traj.states[-1].t, "steps": s.steps}


def critical_a_study(
    f: Nonlinearity,
    bracket: tuple,
    N: int,
    budget_time: float,
    tol_a: float,
    **kw,
) -> CriticalAResult:
    """Bisection on a between a steady (a_lo) and a quenching (a_hi) endpoint.

    Keyword arguments go to ``classify_half_width``.
    """
    lo, hi = (float(v) for v in bracket)
    if not (0 < lo < hi):
        raise InvalidArgument(f"bracket must satisfy 0 < a_lo < a_hi, got ({lo}, {hi})")
    if not (tol_a > 0 and budget_time > 0):
        raise InvalidArgument("tol_a and budget_time must be positive")
    history: list = []
    if tol_a >= hi - lo:
        return CriticalAResult(0.5 * (lo + hi), (lo, hi), history)

    def classify(a):
        rec = classify_half_width(f, a, N, budget_time, **kw)
        history.append(rec)
        log.info("a = %.6f -> %s (%s at t = %.4g)", a, rec["outcome"], rec["status"], rec["t_end"])
        if rec["outcome"] == "inconclusive":
            raise Inconclusive(
                f"a = {a:.17g}: neither quench nor stagnation within simulated time {budget_time}", a=a
            )
        return rec["outcome"]

    out_lo, out_hi = classify(lo), classify(hi)
    if out_lo != "steady" or out_hi != "quench":
        raise InvalidBracket(
            f"bracket ({lo}, {hi}) does not straddle the transition: a_lo -> {out_lo}, a_hi -> {out_hi}"
        )
    while hi - lo > tol_a:
        mid = 0.5 * (lo + hi)
        if classify(mid) == "steady":
            lo = mid
        else:
            hi = mid
    return CriticalAResult(0.5 * (lo + hi), (lo, hi), history)


def find_critical_a(
    f: Nonlinearity,
    bracket: tuple,
    N: int,
    budget_time: float,
    tol_a: float,
    **kw,
) -> float:
    """Smallest half-width at which the scheme quenches, to within tol_a."""
    return critical_a_study(f, bracket, N, budget_time, tol_a, **kw).a_star


# ---------------------------------------------------------------- linalg validation


def _check(margin: float, ok: bool) -> dict:
    return {"pass": bool(ok), "worst_margin": float(margin)}


def validate_operator(
    A: TridiagonalOperator,
    weights,
    *,
    label: str = "",
    taus=(0.01, 0.1, 1.0, 10.0),
    exp_times=(0.01, 0.1, 1.0),
    constants=(0.5, 1.0),
    n_random: int = 100,
    seed: int = 0,
) -> dict:
    """Run every invariant check on one operator.

    Exponential checks are skipped (reported as ``None``) above
    ``DENSE_EXPM_MAX_N``. Random test vectors come from a seeded generator,
    so the report is reproducible.
    """
    w = np.asarray(weights, dtype=float)
    n = A.n
    rng = np.random.default_rng(seed)
    vs = rng.standard_normal((n_random, n))
    vs /= np.sqrt((vs * vs) @ w)[:, None]
    checks: dict = {}

    mu = log_norm_2(A, w)
    checks["log_norm_negative"] = _check(-mu, mu < 0)

    # maximizing trial vector: top eigenvector of the symmetrized form, mapped back by H^-1
    S = symmetrized(A, w)
    _, vecs = np.linalg.eigh(S)
    v_top = vecs[:, -1] / np.sqrt(w)
    probe = log_norm_limit_probe(A, w, [v_top, *vs[:5]])
    gap = abs(probe - mu)
    checks["log_norm_definition"] = _check(LOG_NORM_AGREEMENT - gap, gap <= LOG_NORM_AGREEMENT)

    worst = math.inf
    for tau in taus:
        R = solve_shifted(A, tau, vs.T).T
        slack = 1.0 / (1.0 - tau * mu) - np.sqrt((R * R) @ w)
        worst = min(worst, float(np.min(slack)))
    checks["resolvent_contraction"] = _check(worst, worst >= -CONTRACTION_SLACK)

    worst = min(float(np.min(resolvent(A, tau))) for tau in taus)
    checks["resolvent_nonnegative"] = _check(worst + NONNEG_ATOL, worst >= -NONNEG_ATOL)

    worst = math.inf
    for tau in taus:
        for c in constants:
            ones = np.full(n, float(c))
            worst = min(worst, float(np.min(solve_shifted(A, tau, ones) - ones)))
    checks["resolvent_dominates_constant"] = _check(worst + NONNEG_ATOL, worst >= -NONNEG_ATOL)

    # the reverse inequality, which is what actually holds for a Dirichlet operator
    worst = math.inf
    for tau in taus:
        for c in constants:
            ones = np.full(n, float(c))
            worst = min(worst, float(np.min(ones - solve_shifted(A, tau, ones))))
    checks["resolvent_bounded_by_constant"] = _check(worst + NONNEG_ATOL, worst >= -NONNEG_ATOL)

    if n <= DENSE_EXPM_MAX_N:
        worst_c, worst_p = math.inf, math.inf
        for t in exp_times:
            E = dense_expm(A, t)
            En = E @ vs.T
            slack = math.exp(t * mu) - np.sqrt((En * En).T @ w)
            worst_c = min(worst_c, float(np.min(slack)))
            worst_p = min(worst_p, float(np.min(E)))
        checks["exp_contraction"] = _check(worst_c, worst_c >= -CONTRACTION_SLACK)
        checks["exp_positive"] = _check(worst_p, worst_p > 0)
    else:
        checks["exp_contraction"] = None
        checks["exp_positive"] = None

    ok = all(c["pass"] for c in checks.values() if c is not None)
    return {"label": label, "N": n, "log_norm": mu, "pass": ok, "checks": checks}


def default_validation_grids() -> list[Grid]:
    """Ten uniform and ten graded meshes with N <= 16 and varied half-widths."""
    uniform = [build_uniform(a, N) for a, N in zip(
        (0.5, 0.75, 1.0, 1.2, math.sqrt(2), 1.5, 2.0, 2.5, 3.0, 5.0), (1, 2, 3, 4, 5, 7, 8, 11, 13, 16))]
    graded = [build_graded(a, N, g) for a, N, g in zip(
        (0.5, 0.75, 1.0, 1.2, math.sqrt(2), 1.5, 2.0, 2.5, 3.0, 5.0),
        (2, 3, 4, 5, 6, 8, 9, 12, 15, 16),
        (1.5, 2.0, 1.5, 2.0, 1.5, 2.0, 3.0, 1.5, 2.0, 2.5))]
    return uniform + graded


def validate_linalg(N_list=(), grids=(), *, a: float = 1.0, **kw) -> dict:
    """Invariant suite over uniform grids of the listed sizes plus the given grids.

    Returns a JSON-ready report with per-grid results and, per check, the
    worst margin over all grids.
    """
    all_grids = [(f"uniform a={a:g} N={N}", build_uniform(a, N)) for N in N_list]
    all_grids += [(f"grid a={g.a:g} N={g.N} hmin={float(np.min(g.h)):.3g}", g) for g in grids]
    cases = []
    for i, (label, g) in enumerate(all_grids):
        cases.append(validate_operator(assemble_A(g), g.weights, label=label, seed=i, **kw))
    worst: dict = {}
    for case in cases:
        for name, c in case["checks"].items():
            if c is not None:
                worst[name] = min(worst.get(name, math.inf), c["worst_margin"])
    return {"pass": all(c["pass"] for c in cases), "worst_margins": worst, "cases": cases}
