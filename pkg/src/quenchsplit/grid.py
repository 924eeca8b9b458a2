"""Nonuniform 1-D meshes on [-a, a].

A ``Grid`` stores the N+2 nodes explicitly; spacings and the trapezoidal
weights used by every weighted norm are derived from the nodes once, at
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from quenchsplit.errors import InvalidArgument

# relative slack for the endpoint / total-length checks in validate()
_LENGTH_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """Mesh -a = x_0 < x_1 < ... < x_{N+1} = a.

    Attributes:
        a: domain half-width.
        x: nodes, shape (N+2,), boundary nodes included.
        h: spacings h_n = x_{n+1} - x_n, shape (N+1,).
        weights: (h_{k-1} + h_k) / 2 for interior nodes k = 1..N, shape (N,).
    """

    a: float
    x: np.ndarray
    h: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=float)
        x.setflags(write=False)
        h = np.diff(x)
        h.setflags(write=False)
        w = 0.5 * (h[:-1] + h[1:])
        w.setflags(write=False)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.x.size - 2

    @property
    def interior(self) -> np.ndarray:
        return self.x[1:-1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.a == other.a and np.array_equal(self.x, other.x)

    def to_json(self) -> dict:
        return {"a": self.a, "N": self.N, "x": [float(v) for v in self.x]}

    @classmethod
    def from_json(cls, doc: dict) -> "Grid":
        grid = cls(a=float(doc["a"]), x=np.asarray(doc["x"], dtype=float))
        if "N" in doc and int(doc["N"]) != grid.N:
            raise InvalidArgument(f"N={doc['N']} does not match {grid.N} interior nodes")
        problems = validate(grid)
        if problems:
            raise InvalidArgument("invalid grid: " + "; ".join(problems))
        return grid


def _check_args(a: float, N: int) -> None:
    if not a > 0 or not np.isfinite(a):
        raise InvalidArgument(f"half-width a must be positive, got {a}")
    if int(N) != N or N < 1:
        raise InvalidArgument(f"N must be a positive integer, got {N}")


def build_uniform(a: float, N: int) -> Grid:
    _check_args(a, N)
    return build_graded(a, N, 1.0)


def build_graded(a: float, N: int, grading: float) -> Grid:
    """Symmetric center-refined mesh x_n = a sign(s_n) |s_n|**grading.

    s_n = -1 + 2n/(N+1) is the uniform reference coordinate, so grading=1
    gives the uniform mesh and grading>1 clusters nodes around x = 0.
    """
    _check_args(a, N)
    if not grading >= 1:
        raise InvalidArgument(f"grading must be >= 1, got {grading}")
    n = np.arange(N + 2)
    s = -1.0 + 2.0 * n / (N + 1)
    if grading == 1.0:
        x = a * s
    else:
        x = a * np.sign(s) * np.abs(s) ** grading
    # pin endpoints exactly; the mapping is exact there but keep it explicit
    x[0], x[-1] = -a, a
    return Grid(a=a, x=x)


def validate(grid: Grid) -> list[str]:
    """Every invariant violation of ``grid``; empty when the grid is valid."""
    problems = []
    x, h, a = grid.x, grid.h, grid.a
    if x.size < 3:
        problems.append(f"need at least one interior node, got {x.size} nodes")
        return problems
    if not a > 0:
        problems.append(f"half-width a = {a:g} is not positive")
    if not np.all(np.isfinite(x)):
        bad = np.flatnonzero(~np.isfinite(x))
        problems.append(f"non-finite node at index {int(bad[0])}")
        return problems
    tol = _LENGTH_RTOL * max(abs(a), 1.0)
    if abs(x[0] + a) > tol:
        problems.append(f"x_0 = {x[0]:.17g} differs from -a = {-a:.17g}")
    if abs(x[-1] - a) > tol:
        problems.append(f"x_{grid.N + 1} = {x[-1]:.17g} differs from a = {a:.17g}")
    for n in np.flatnonzero(h <= 0):
        problems.append(f"h_{n} = {h[n]:g} at index {n}")
    total = float(np.sum(h))
    if abs(total - 2 * a) > tol * (grid.N + 1):
        problems.append(f"sum of spacings {total:.17g} differs from 2a = {2 * a:.17g}")
    if np.any(grid.weights <= 0):
        k = int(np.flatnonzero(grid.weights <= 0)[0]) + 1
        problems.append(f"weight w_{k} is not positive")
    return problems
