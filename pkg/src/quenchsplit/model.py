"""Reaction nonlinearities, initial data, admissibility checks and problem specs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from quenchsplit.errors import InvalidArgument
from quenchsplit.grid import Grid, build_graded, build_uniform

# Fixed sampling plan for the analytic hypotheses (deterministic, no RNG).
N_POINTS = 1000
N_PAIR_AXIS = 100  # 100 x 100 lattice -> 10**4 pairs
EPS_LADDER = 10.0 ** -np.arange(1, 7)
SAMPLE_TOP = 1.0 - 1e-6

DEFAULT_QUENCH_THRESHOLD = 1.0 - 1e-3


@dataclass(frozen=True)
class Nonlinearity:
    """Source term f on [0, 1) with derivative and a local Lipschitz envelope.

    ``inv_f_one_minus_integral(s)`` returns the integral of 1/f(1 - z) over
    [0, s]; it feeds the accumulated-time bound of the splitting scheme.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    lipschitz: Callable[[np.ndarray, np.ndarray], np.ndarray]
    inv_f_one_minus_integral: Callable[[float], float]
    label: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"label": self.label, **self.params}


@dataclass(frozen=True)
class InitialCondition:
    eval: Callable[[np.ndarray], np.ndarray]
    second_deriv: Callable[[np.ndarray], np.ndarray]
    label: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"label": self.label, **self.params}


def power_law(p: float = 1.0) -> Nonlinearity:
    """f(u) = (1 - u)**(-p); p = 1 is the Kawarada source."""
    if not p >= 1:
        # p < 1 keeps f integrable on [0, 1), violating the divergence hypothesis
        raise InvalidArgument(f"exponent p must be >= 1, got {p}")
    p = float(p)

    def f(u):
        return (1.0 - np.asarray(u, dtype=float)) ** -p

    def df(u):
        return p * (1.0 - np.asarray(u, dtype=float)) ** (-p - 1.0)

    def lip(x, y):
        return p * (1.0 - np.maximum(x, y)) ** (-p - 1.0)

    def integral(s):
        return s ** (p + 1.0) / (p + 1.0)

    if p == 1.0:
        return Nonlinearity(f, df, lip, integral, "kawarada")
    return Nonlinearity(f, df, lip, integral, "power", {"p": p})


def kawarada() -> Nonlinearity:
    """f(u) = 1/(1 - u)."""
    return power_law(1.0)


def zero_initial(a: float) -> InitialCondition:
    if not a > 0:
        raise InvalidArgument(f"half-width a must be positive, got {a}")
    return InitialCondition(
        eval=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        second_deriv=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        label="zero",
    )


def bump_initial(a: float, amplitude: float) -> InitialCondition:
    """u0(x) = amplitude * cos(pi x / (2a)), vanishing at x = +-a."""
    if not (0 <= amplitude < 1):
        raise InvalidArgument(f"amplitude must lie in [0, 1), got {amplitude}")
    k = np.pi / (2.0 * a)
    return InitialCondition(
        eval=lambda x: amplitude * np.cos(k * np.asarray(x, dtype=float)),
        second_deriv=lambda x: -amplitude * k * k * np.cos(k * np.asarray(x, dtype=float)),
        label="bump",
        params={"amplitude": float(amplitude)},
    )


NONLINEARITIES = {
    "kawarada": lambda **kw: kawarada(),
    "power": lambda p=1.0, **kw: power_law(p),
}
INITIAL_CONDITIONS = {
    "zero": lambda a, **kw: zero_initial(a),
    "bump": lambda a, amplitude=0.0, **kw: bump_initial(a, amplitude),
}


def check_nonlinearity(f: Nonlinearity) -> list[str]:
    """Sampled versions of positivity, monotonicity, Lipschitz, convexity, divergence."""
    problems = []
    xs = np.linspace(0.0, SAMPLE_TOP, N_POINTS)
    with np.errstate(all="ignore"):
        f0 = float(f.eval(np.array([0.0]))[0])
        fx = f.eval(xs)
        dfx = f.deriv(xs)
    if not f0 > 0:
        problems.append(f"f(0) > 0 fails: f(0) = {f0:g}")
    if not np.all(np.isfinite(fx)):
        problems.append("f is not finite on the sample of [0, 1)")
    bad = np.flatnonzero(~(dfx > 0))
    if bad.size:
        problems.append(f"f' > 0 fails at u = {xs[bad[0]]:.6g}")

    axis = np.linspace(0.0, SAMPLE_TOP, N_PAIR_AXIS)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    with np.errstate(all="ignore"):
        lhs = np.abs(f.eval(X) - f.eval(Y))
        rhs = f.lipschitz(X, Y) * np.abs(X - Y)
        mid = f.eval(0.5 * (X + Y))
        chord = 0.5 * (f.eval(X) + f.eval(Y))
    scale = np.maximum(np.abs(lhs), 1.0)
    bad = np.flatnonzero(lhs > rhs + 1e-12 * scale)
    if bad.size:
        i = bad[0]
        problems.append(f"Lipschitz envelope fails at (x, y) = ({X[i]:.6g}, {Y[i]:.6g})")
    bad = np.flatnonzero(mid > chord * (1 + 1e-12))
    if bad.size:
        i = bad[0]
        problems.append(f"midpoint convexity fails at (x, y) = ({X[i]:.6g}, {Y[i]:.6g})")

    with np.errstate(all="ignore"):
        ladder = f.eval(1.0 - EPS_LADDER)
    if not (np.all(np.diff(ladder) > 0) and ladder[-1] >= 10 * ladder[0]):
        problems.append("f(1 - eps) does not grow monotonically without bound on the eps ladder")
    return problems


def check_initial(u0: InitialCondition, f: Nonlinearity, a: float) -> list[str]:
    problems = []
    ends = u0.eval(np.array([-a, a]))
    if np.any(np.abs(ends) > 1e-14):
        problems.append(f"boundary condition u0(-a) = u0(a) = 0 fails: got ({ends[0]:g}, {ends[1]:g})")
    xs = np.linspace(-a, a, N_POINTS)
    vals = u0.eval(xs)
    bad = np.flatnonzero(~((vals >= 0) & (vals < 1)))
    if bad.size:
        problems.append(f"0 <= u0 < 1 fails at x = {xs[bad[0]]:.6g}")
        return problems
    with np.errstate(all="ignore"):
        pos = u0.second_deriv(xs) + f.eval(vals)
    bad = np.flatnonzero(~(pos > 0))
    if bad.size:
        problems.append(f"u0'' + f(u0) > 0 fails at x = {xs[bad[0]]:.6g}")
    return problems


def check_admissible(f: Nonlinearity, u0: InitialCondition, grid: Grid) -> list[str]:
    """All failed hypotheses on (f, u0) plus the discrete A U0 + F(U0) > 0 test."""
    from quenchsplit.linalg import assemble_A

    problems = check_nonlinearity(f) + check_initial(u0, f, grid.a)
    if problems:
        return problems
    U0 = u0.eval(grid.interior)
    drift = assemble_A(grid).matvec(U0) + f.eval(U0)
    bad = np.flatnonzero(~(drift > 0))
    if bad.size:
        n = int(bad[0]) + 1
        problems.append(f"A U0 + F(U0) > 0 fails at node {n} (x = {grid.x[n]:.6g})")
    return problems


@dataclass(frozen=True)
class ProblemSpec:
    grid: Grid
    f: Nonlinearity
    u0: InitialCondition
    delta: float
    quench_threshold: float = DEFAULT_QUENCH_THRESHOLD
    max_steps: int = 100_000
    grid_kind: dict = field(default_factory=lambda: {"kind": "explicit"}, compare=False)

    def __post_init__(self) -> None:
        if not (0 < self.delta < 1):
            raise InvalidArgument(f"delta must lie in (0, 1), got {self.delta}")
        if not (0.9 < self.quench_threshold < 1):
            raise InvalidArgument(f"quench_threshold must lie in (0.9, 1), got {self.quench_threshold}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 0:
            raise InvalidArgument(f"max_steps must be a nonnegative integer, got {self.max_steps}")

    @property
    def U0(self) -> np.ndarray:
        return np.asarray(self.u0.eval(self.grid.interior), dtype=float)

    def replace(self, **changes) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, **changes)

    def to_json(self) -> dict:
        return {
            "a": self.grid.a,
            "N": self.grid.N,
            "grid": {**self.grid_kind, "x": [float(v) for v in self.grid.x]},
            "nonlinearity": self.f.to_json(),
            "initial": self.u0.to_json(),
            "delta": self.delta,
            "quench_threshold": self.quench_threshold,
            "max_steps": self.max_steps,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProblemSpec":
        """Build from a config ``problem`` block.

        ``grid`` is {"kind": "uniform"} (default), {"kind": "graded",
        "grading": g} or {"kind": "explicit", "x": [...]}; ``nonlinearity`` is a
        label string or {"label": ..., params}; ``initial`` likewise.
        """
        try:
            a = float(doc["a"])
            grid_doc = dict(doc.get("grid") or {"kind": "uniform"})
            kind = grid_doc.get("kind", "uniform")
            if kind == "uniform":
                grid = build_uniform(a, int(doc["N"]))
                grid_kind = {"kind": "uniform"}
            elif kind == "graded":
                g = float(grid_doc.get("grading", 1.0))
                grid = build_graded(a, int(doc["N"]), g)
                grid_kind = {"kind": "graded", "grading": g}
            elif kind == "explicit":
                grid = Grid.from_json({"a": a, "x": grid_doc["x"]})
                grid_kind = {"kind": "explicit"}
            else:
                raise InvalidArgument(f"unknown grid kind {kind!r}")
            f = lookup(NONLINEARITIES, doc.get("nonlinearity", "kawarada"), "nonlinearity")
            u0 = lookup(INITIAL_CONDITIONS, doc.get("initial", "zero"), "initial condition", a=a)
            return cls(
                grid=grid,
                f=f,
                u0=u0,
                delta=float(doc["delta"]),
                quench_threshold=float(doc.get("quench_threshold", DEFAULT_QUENCH_THRESHOLD)),
                max_steps=int(doc.get("max_steps", 100_000)),
                grid_kind=grid_kind,
            )
        except KeyError as exc:
            raise InvalidArgument(f"problem config is missing key {exc.args[0]!r}") from None


def lookup(table: dict, entry, what: str, **extra):
    if isinstance(entry, str):
        label, params = entry, {}
    else:
        params = dict(entry)
        label = params.pop("label", None)
    if label not in table:
        raise InvalidArgument(f"unknown {what} {label!r}; known: {sorted(table)}")
    return table[label](**extra, **params)
