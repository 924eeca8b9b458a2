"""Tridiagonal discrete Laplacian, shifted solves and weighted (log-)norms.

The production path only needs ``assemble_A``, ``solve_shifted`` and
``weighted_norm``. The logarithmic-norm routines, the resolvent checks and
``dense_expm`` are small-scale validation tools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from quenchsplit.errors import InvalidArgument, UnsupportedSize
from quenchsplit.grid import Grid

NONNEG_ATOL = 1e-13
DENSE_EXPM_MAX_N = 16


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """N x N tridiagonal matrix stored by diagonals.

    ``sub[j]`` is entry (j+1, j) and ``sup[j]`` is entry (j, j+1), 0-based.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self) -> None:
        for name in ("sub", "diag", "sup"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.diag.size
        if n < 1 or self.sub.size != n - 1 or self.sup.size != n - 1:
            raise InvalidArgument(
                f"inconsistent band sizes: sub {self.sub.size}, diag {n}, sup {self.sup.size}"
            )

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[1:] += self.sub * v[:-1]
        out[:-1] += self.sup * v[1:]
        return out

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def row_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[1:] += self.sub
        s[:-1] += self.sup
        return s


@dataclass(frozen=True)
class WeightedNormContext:
    weights: np.ndarray
    p: float = 2.0

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w <= 0):
            raise InvalidArgument("weights must be a 1-D vector of positive reals")
        if not (self.p >= 1):
            raise InvalidArgument(f"norm index p must lie in [1, inf], got {self.p}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def for_grid(cls, grid: Grid, p: float = 2.0) -> "WeightedNormContext":
        return cls(grid.weights, p)


def assemble_A(grid: Grid) -> TridiagonalOperator:
    """Central-difference second derivative on ``grid`` with zero Dirichlet data."""
    h = grid.h
    hl, hr = h[:-1], h[1:]  # h_{n-1}, h_n for interior rows n = 1..N
    diag = -2.0 / (hl * hr)
    left = 2.0 / (hl * (hl + hr))
    right = 2.0 / (hr * (hl + hr))
    return TridiagonalOperator(sub=left[1:], diag=diag, sup=right[:-1])


def weighted_norm(v, ctx: WeightedNormContext) -> float:
    v = np.asarray(v, dtype=float)
    if v.shape != ctx.weights.shape:
        raise InvalidArgument(f"vector length {v.size} does not match {ctx.weights.size} weights")
    if math.isinf(ctx.p):
        return float(np.max(np.abs(v))) if v.size else 0.0
    if ctx.p == 2:
        return float(math.sqrt(np.dot(ctx.weights, v * v)))
    return float(np.dot(ctx.weights, np.abs(v) ** ctx.p) ** (1.0 / ctx.p))


def norm_h2(v, weights) -> float:
    """Weighted 2-norm shortcut used on hot paths (no validation)."""
    return float(math.sqrt(np.dot(weights, v * v)))


def _as_dense(B) -> np.ndarray:
    if isinstance(B, TridiagonalOperator):
        return B.to_dense()
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {B.shape}")
    return B


def symmetrized(B, weights) -> np.ndarray:
    """1/2 [(H B H^-1)^T + H B H^-1] with H = diag(sqrt(weights))."""
    B = _as_dense(B)
    w = np.asarray(weights, dtype=float)
    if w.shape != (B.shape[0],):
        raise InvalidArgument(f"{w.size} weights for a {B.shape[0]}x{B.shape[0]} matrix")
    if np.any(w <= 0):
        raise InvalidArgument("weights must be positive")
    r = np.sqrt(w)
    S = (r[:, None] * B) / r[None, :]
    return 0.5 * (S + S.T)


def largest_eigenvalue_tridiag(d, e) -> float:
    """Largest eigenvalue of a symmetric tridiagonal matrix.

    LAPACK's Sturm-sequence bisection (dstebz) restricted to the top index,
    run to the smallest representable interval: the default eps * ||T||
    stopping width loses digits on strongly graded meshes where ||T|| ~ 1/h_min^2.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    n = d.size
    if n == 1:
        return float(d[0])
    top = eigvalsh_tridiagonal(d, e, select="i", select_range=(n - 1, n - 1), lapack_driver="stebz",
                               tol=np.finfo(float).tiny)
    return float(top[0])


def log_norm_2(B, weights) -> float:
    """Weighted 2-logarithmic norm: top eigenvalue of the symmetrized similarity.

    Tridiagonal input (the only case arising from grids) goes through Sturm
    bisection; a general dense matrix falls back to ``numpy.linalg.eigvalsh``.
    """
    S = symmetrized(B, weights)
    n = S.shape[0]
    if n > 2 and np.any(np.triu(S, 2) != 0):
        return float(np.linalg.eigvalsh(S)[-1])
    return largest_eigenvalue_tridiag(np.diag(S), np.diag(S, 1))


def default_t_sequence(B, levels: int = 5) -> np.ndarray:
    B = _as_dense(B)
    scale = max(float(np.max(np.sum(np.abs(B), axis=1))), 1.0)
    return (1e-3 / scale) * 0.5 ** np.arange(levels)


def _extrapolate_to_zero(t: np.ndarray, q: np.ndarray) -> float:
    """Neville-Aitken polynomial extrapolation of q(t) to t = 0."""
    p = list(q)
    n = len(p)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (t[i + m] * p[i] - t[i] * p[i + 1]) / (t[i + m] - t[i])
    return float(p[0])


def log_norm_limit_probe(B, weights, trial_vectors, t_sequence=None) -> float:
    """Estimate the logarithmic norm from its limit-quotient definition.

    For each trial vector v the difference quotient
    (||(I + tB)v|| - ||v||) / (t ||v||) is evaluated along ``t_sequence`` and
    extrapolated to t -> 0; the maximum over trial vectors is returned.
    """
    B = _as_dense(B)
    trials = [np.asarray(v, dtype=float) for v in trial_vectors]
    if not trials:
        raise InvalidArgument("need at least one trial vector")
    ctx = WeightedNormContext(weights, 2.0)
    t = np.asarray(default_t_sequence(B) if t_sequence is None else t_sequence, dtype=float)
    if t.size < 1 or np.any(t <= 0) or np.any(np.diff(t) >= 0):
        raise InvalidArgument("t_sequence must be strictly decreasing positive reals")
    best = -math.inf
    for v in trials:
        nv = weighted_norm(v, ctx)
        if nv == 0:
            raise InvalidArgument("trial vectors must be nonzero")
        Bv = B @ v
        q = np.array([(weighted_norm(v + ti * Bv, ctx) - nv) / (ti * nv) for ti in t])
        best = max(best, _extrapolate_to_zero(t, q))
    return best


def _shifted_bands(A: TridiagonalOperator, tau: float) -> np.ndarray:
    ab = np.empty((3, A.n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -tau * A.sup
    ab[1] = 1.0 - tau * A.diag
    ab[2, :-1] = -tau * A.sub
    ab[2, -1] = 0.0
    return ab


def solve_shifted(A: TridiagonalOperator, tau: float, rhs) -> np.ndarray:
    """Solve (I - tau A) w = rhs.

    I - tau A is strictly diagonally dominant for the grid operator, so the
    LAPACK tridiagonal solve never meets a zero pivot.
    """
    if not tau >= 0:
        raise InvalidArgument(f"tau must be nonnegative, got {tau}")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != A.n:
        raise InvalidArgument(f"rhs has {rhs.shape[0]} rows, operator has {A.n}")
    if tau == 0:
        return rhs.copy()
    return solve_banded((1, 1), _shifted_bands(A, tau), rhs, check_finite=False)


def resolvent(A: TridiagonalOperator, tau: float) -> np.ndarray:
    """Dense (I - tau A)^-1, assembled column by column from basis solves."""
    return solve_shifted(A, tau, np.eye(A.n))


def resolvent_is_nonnegative(A: TridiagonalOperator, tau: float) -> bool:
    return bool(np.min(resolvent(A, tau)) >= -NONNEG_ATOL)


def resolvent_dominates_constant(A: TridiagonalOperator, tau: float, c: float) -> bool:
    """Whether (I - tau A)^-1 (c, ..., c) >= (c, ..., c) componentwise, within 1e-13.

    For the Dirichlet grid operator this is false whenever c > 0 and tau > 0:
    rows touching the boundary have negative row sums, so the inequality
    holds in the opposite direction (see ``resolvent_bounded_by_constant``).
    """
    if not (tau >= 0 and c >= 0):
        raise InvalidArgument("tau and c must be nonnegative")
    ones = np.full(A.n, float(c))
    return bool(np.min(solve_shifted(A, tau, ones) - ones) >= -NONNEG_ATOL)


def resolvent_bounded_by_constant(A: TridiagonalOperator, tau: float, c: float) -> bool:
    """Whether (I - tau A)^-1 (c, ..., c) <= (c, ..., c) componentwise, within 1e-13."""
    if not (tau >= 0 and c >= 0):
        raise InvalidArgument("tau and c must be nonnegative")
    ones = np.full(A.n, float(c))
    return bool(np.max(solve_shifted(A, tau, ones) - ones) <= NONNEG_ATOL)


def dense_expm(B, t: float) -> np.ndarray:
    """exp(tB) by shifted Taylor series with scaling and squaring (N <= 16).

    B is first shifted by alpha I so that its diagonal is nonnegative; for a
    Metzler matrix (nonnegative off-diagonal, e.g. the grid operator) every
    Taylor term and every squaring is then entrywise nonnegative, so no
    cancellation can destroy the sign pattern.
    """
    B = _as_dense(B)
    n = B.shape[0]
    if n > DENSE_EXPM_MAX_N:
        raise UnsupportedSize(f"dense_expm is a validation tool limited to N <= {DENSE_EXPM_MAX_N}, got {n}")
    if not t >= 0:
        raise InvalidArgument(f"t must be nonnegative, got {t}")
    alpha = max(0.0, -float(np.min(np.diag(B))))
    M = t * (B + alpha * np.eye(n))
    norm = float(np.max(np.sum(np.abs(M), axis=1))) if n else 0.0
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    X = M / 2.0**s
    shift = math.exp(-alpha * t / 2.0**s)
    E = np.eye(n)
    term = np.eye(n)
    # at least n - 1 terms so that every entry reachable through the sparsity
    # pattern receives its leading (tiny but positive) contribution
    for k in range(1, max(40, n + 1)):
        term = term @ X / k
        E = E + term
        if k >= n - 1 and np.max(np.abs(term)) <= 1e-18 * np.max(np.abs(E)):
            break
    E *= shift
    for _ in range(s):
        E = E @ E
    return E
