import math

import numpy as np
import pytest
import scipy.linalg

from quenchsplit.errors import InvalidArgument, UnsupportedSize
from quenchsplit.grid import build_graded, build_uniform
from quenchsplit.linalg import (
    TridiagonalOperator,
    WeightedNormContext,
    assemble_A,
    dense_expm,
    log_norm_2,
    log_norm_limit_probe,
    resolvent,
    resolvent_bounded_by_constant,
    resolvent_dominates_constant,
    resolvent_is_nonnegative,
    solve_shifted,
    symmetrized,
    weighted_norm,
)


def test_assemble_uniform_unit_spacing():
    A = assemble_A(build_uniform(2.0, 3))
    np.testing.assert_array_equal(A.diag, [-2, -2, -2])
    np.testing.assert_array_equal(A.sub, [1, 1])
    np.testing.assert_array_equal(A.sup, [1, 1])


def test_assemble_single_node():
    A = assemble_A(build_uniform(1.0, 1))
    np.testing.assert_array_equal(A.to_dense(), [[-2.0]])


def test_assemble_graded_is_nonsymmetric():
    g = build_graded(1.0, 3, 2.0)
    A = assemble_A(g)
    h = g.h
    # row 2 (1-based) couples to node 1 through 2/(h_1 (h_1 + h_2)), row 1 to node 2 through 2/(h_1 (h_0 + h_1))
    assert A.sub[0] == pytest.approx(2 / (h[1] * (h[1] + h[2])))
    assert A.sup[0] == pytest.approx(2 / (h[1] * (h[0] + h[1])))
    assert A.sub[0] != pytest.approx(A.sup[0])


def test_row_sums_sign_pattern():
    for g in (build_uniform(1.0, 9), build_graded(2.0, 12, 2.0)):
        rs = assemble_A(g).row_sums()
        scale = np.max(np.abs(assemble_A(g).diag))
        assert np.all(np.abs(rs[1:-1]) <= 1e-13 * scale)
        assert rs[0] < 0 and rs[-1] < 0


def test_operator_band_size_mismatch():
    with pytest.raises(InvalidArgument):
        TridiagonalOperator(sub=[1.0], diag=[1.0, 2.0, 3.0], sup=[1.0, 1.0])


@pytest.mark.parametrize(
    "v,w,p,expected",
    [
        ([1, 1, 1], [1, 1, 1], 2, math.sqrt(3)),
        ([0, 0], [0.3, 0.7], 1, 0.0),
        ([0, 0], [0.3, 0.7], math.inf, 0.0),
        ([3, -4], [0.5, 0.5], 2, math.sqrt(12.5)),
        ([3, -4], [0.5, 0.5], math.inf, 4.0),
        ([3, -4], [0.5, 0.5], 1, 3.5),
    ],
)
def test_weighted_norm(v, w, p, expected):
    assert weighted_norm(v, WeightedNormContext(w, p)) == pytest.approx(expected, rel=1e-15)


def test_weighted_norm_length_mismatch():
    with pytest.raises(InvalidArgument):
        weighted_norm([1.0, 2.0], WeightedNormContext([1.0, 1.0, 1.0]))


def test_weighted_norm_context_validation():
    with pytest.raises(InvalidArgument):
        WeightedNormContext([1.0, 0.0])
    with pytest.raises(InvalidArgument):
        WeightedNormContext([1.0], p=0.5)


def test_log_norm_uniform_unit_spacing():
    A = assemble_A(build_uniform(2.0, 3))
    expected = float(np.linalg.eigvalsh(A.to_dense())[-1])
    assert expected == pytest.approx(-2 + math.sqrt(2), abs=1e-14)
    assert log_norm_2(A, np.ones(3)) == pytest.approx(-2 + math.sqrt(2), abs=1e-13)


def test_log_norm_identity_and_zero():
    w = np.array([0.2, 1.5, 3.0])
    assert log_norm_2(np.eye(3), w) == pytest.approx(1.0, abs=1e-14)
    assert log_norm_2(np.zeros((3, 3)), w) == pytest.approx(0.0, abs=1e-14)


def test_log_norm_dense_fallback_matches_eigvalsh():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((6, 6))
    w = rng.uniform(0.1, 2.0, 6)
    assert log_norm_2(B, w) == pytest.approx(np.linalg.eigvalsh(symmetrized(B, w))[-1], rel=1e-12)


def test_log_norm_graded_matches_dense_eigensolver():
    g = build_graded(1.5, 30, 2.0)
    A = assemble_A(g)
    ref = np.linalg.eigvalsh(symmetrized(A, g.weights))[-1]
    assert log_norm_2(A, g.weights) == pytest.approx(ref, rel=1e-12)


def test_log_norm_strongly_graded_grid():
    # reference: 30-digit symmetric eigensolver (mpmath.eigsy) on the same symmetrized matrix
    g = build_graded(1.0, 80, 3.0)
    assert log_norm_2(assemble_A(g), g.weights) == pytest.approx(-2.46447114620002292, rel=1e-10)


def test_log_norm_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        log_norm_2(np.eye(3), np.ones(2))


def test_probe_identity():
    rng = np.random.default_rng(0)
    trials = list(rng.standard_normal((4, 5)))
    assert log_norm_limit_probe(np.eye(5), np.ones(5), trials) == pytest.approx(1.0, abs=1e-8)


def test_probe_uniform_eigenvector():
    A = assemble_A(build_uniform(2.0, 3))
    v = np.array([1.0, math.sqrt(2), 1.0])
    assert log_norm_limit_probe(A, np.ones(3), [v]) == pytest.approx(-2 + math.sqrt(2), abs=1e-6)


def test_probe_nilpotent_two_by_two():
    B = np.array([[0.0, 1.0], [0.0, 0.0]])
    trials = [np.array([1.0, 1.0]), np.array([1.0, -1.0])]
    # 1/2 (B + B^T) has eigenvalues +-1/2, top eigenvector (1, 1)
    assert log_norm_limit_probe(B, np.ones(2), trials) == pytest.approx(0.5, abs=1e-6)


def test_probe_is_below_log_norm_for_other_vectors():
    g = build_graded(1.0, 8, 1.5)
    A = assemble_A(g)
    rng = np.random.default_rng(1)
    mu = log_norm_2(A, g.weights)
    assert log_norm_limit_probe(A, g.weights, list(rng.standard_normal((10, 8)))) <= mu + 1e-6


def test_probe_rejects_empty_trials():
    with pytest.raises(InvalidArgument):
        log_norm_limit_probe(np.eye(2), np.ones(2), [])


def test_solve_shifted_identity_at_zero_tau():
    A = assemble_A(build_uniform(1.0, 4))
    rhs = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_array_equal(solve_shifted(A, 0.0, rhs), rhs)


def test_solve_shifted_scalar():
    A = TridiagonalOperator(sub=[], diag=[-2.0], sup=[])
    np.testing.assert_allclose(solve_shifted(A, 1.0, [3.0]), [1.0], rtol=1e-15)


def test_solve_shifted_matches_dense_lu():
    g = build_graded(1.0, 50, 2.0)
    A = assemble_A(g)
    rhs = np.random.default_rng(7).standard_normal(50)
    for tau in (1e-3, 0.1, 10.0):
        M = np.eye(50) - tau * A.to_dense()
        ref = scipy.linalg.lu_solve(scipy.linalg.lu_factor(M), rhs)
        w = solve_shifted(A, tau, rhs)
        np.testing.assert_allclose(w, ref, rtol=1e-10, atol=1e-10 * np.max(np.abs(ref)))


def test_solve_shifted_residual_bound():
    A = assemble_A(build_uniform(1.0, 64))
    rhs = np.random.default_rng(8).standard_normal(64)
    for tau in (1e-3, 0.1, 1.0):
        M = np.eye(64) - tau * A.to_dense()
        w = solve_shifted(A, tau, rhs)
        assert np.max(np.abs(M @ w - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_solve_shifted_backward_error_on_stiff_rows():
    # rows with tau * 2/h^2 ~ 1e7: the residual can only be resolved relative to |M| |w|
    A = assemble_A(build_graded(1.0, 50, 2.0))
    rhs = np.random.default_rng(9).standard_normal(50)
    M = np.eye(50) - 10.0 * A.to_dense()
    w = solve_shifted(A, 10.0, rhs)
    scale = np.abs(M) @ np.abs(w) + np.abs(rhs)
    assert np.all(np.abs(M @ w - rhs) <= 64 * np.finfo(float).eps * scale)


def test_solve_shifted_rejects_negative_tau():
    with pytest.raises(InvalidArgument):
        solve_shifted(assemble_A(build_uniform(1.0, 3)), -0.1, np.ones(3))


def test_resolvent_nonnegative():
    for g in (build_uniform(1.0, 10), build_graded(2.0, 17, 2.0)):
        A = assemble_A(g)
        assert resolvent_is_nonnegative(A, 0.1)
        assert resolvent_is_nonnegative(A, 0.0)


def test_resolvent_nonnegativity_check_is_not_vacuous():
    A = assemble_A(build_uniform(1.0, 6))
    D = A.to_dense()
    absA = np.abs(D)
    flipped = TridiagonalOperator(np.diag(absA, -1), np.diag(absA), np.diag(absA, 1))
    # I - tau |A| has negative diagonal for tau large; its inverse mixes signs
    assert not resolvent_is_nonnegative(flipped, 10.0)


def test_resolvent_dominates_constant_zero_constant():
    assert resolvent_dominates_constant(assemble_A(build_uniform(2.0, 3)), 0.1, 0.0)


def test_resolvent_dominates_constant_uniform_n3():
    A = assemble_A(build_uniform(2.0, 3))
    assert resolvent_dominates_constant(A, 0.1, 1.0)


def test_resolvent_dominates_constant_large_tau():
    A = assemble_A(build_uniform(2.0, 3))
    assert resolvent_dominates_constant(A, 10.0, 1.0)


def test_resolvent_applied_to_ones_uniform_n3():
    # (I - 0.1 A) = tridiag(-0.1, 1.2, -0.1); symmetry x1 = x3 gives x1 = 1.3/1.42, x2 = (1 + 0.2 x1)/1.2
    A = assemble_A(build_uniform(2.0, 3))
    x1 = 1.3 / 1.42
    np.testing.assert_allclose(solve_shifted(A, 0.1, np.ones(3)), [x1, (1 + 0.2 * x1) / 1.2, x1], rtol=1e-14)
    assert resolvent_bounded_by_constant(A, 0.1, 1.0)
    assert resolvent_bounded_by_constant(A, 10.0, 1.0)


def test_dense_expm_trivial_cases():
    np.testing.assert_array_equal(dense_expm(np.zeros((3, 3)), 1.0), np.eye(3))
    np.testing.assert_allclose(dense_expm(np.array([[-1.0]]), 1.0), [[math.exp(-1)]], rtol=1e-14)


def test_dense_expm_positive_uniform():
    E = dense_expm(assemble_A(build_uniform(2.0, 3)), 0.5)
    assert np.all(E > 0)


def test_dense_expm_matches_scipy():
    for g in (build_uniform(1.0, 16), build_graded(1.0, 12, 2.0)):
        A = assemble_A(g).to_dense()
        for t in (0.01, 0.3, 2.0):
            ref = scipy.linalg.expm(t * A)
            growth = t * np.max(np.sum(np.abs(A), axis=1))
            bound = 1e-12 * math.exp(growth) if growth < 700 else math.inf
            assert np.max(np.abs(dense_expm(A, t) - ref)) <= bound


def test_dense_expm_far_entries_positive_for_small_t():
    E = dense_expm(assemble_A(build_uniform(5.0, 16)), 0.01)
    assert np.min(E) > 0


def test_dense_expm_size_guard():
    with pytest.raises(UnsupportedSize):
        dense_expm(np.eye(17), 1.0)


def test_resolvent_matrix_columns():
    A = assemble_A(build_uniform(1.0, 5))
    R = resolvent(A, 0.3)
    np.testing.assert_allclose((np.eye(5) - 0.3 * A.to_dense()) @ R, np.eye(5), atol=1e-13)
