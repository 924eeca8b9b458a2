import math

import numpy as np
import pytest

from quenchsplit.errors import InvalidArgument
from quenchsplit.grid import Grid, build_graded, build_uniform, validate


def test_uniform_a2_n3():
    g = build_uniform(2.0, 3)
    np.testing.assert_array_equal(g.x, [-2, -1, 0, 1, 2])
    np.testing.assert_array_equal(g.h, [1, 1, 1, 1])
    np.testing.assert_array_equal(g.weights, [1, 1, 1])


def test_uniform_single_interior_node():
    a = math.sqrt(2)
    g = build_uniform(a, 1)
    np.testing.assert_allclose(g.x, [-a, 0, a], rtol=0, atol=1e-15)
    np.testing.assert_allclose(g.h, [a, a], rtol=1e-15)


@pytest.mark.parametrize("a,N", [(1.0, 0), (0.0, 3), (-1.0, 3), (1.0, 2.5)])
def test_uniform_rejects_bad_arguments(a, N):
    with pytest.raises(InvalidArgument):
        build_uniform(a, N)


def test_graded_one_is_uniform():
    assert build_graded(1.0, 3, 1.0) == build_uniform(1.0, 3)


def test_graded_two_nodes():
    np.testing.assert_allclose(build_graded(1.0, 3, 2.0).x, [-1, -0.25, 0, 0.25, 1], atol=1e-15)


def test_graded_min_spacing_next_to_center():
    g = build_graded(1.0, 5, 2.0)
    # nodes symmetric about x_3 = 0: spacings h_2, h_3 touch the center
    assert int(np.argmin(g.h)) in (2, 3)
    assert g.h[2] == pytest.approx(g.h[3])


def test_graded_rejects_grading_below_one():
    with pytest.raises(InvalidArgument):
        build_graded(1.0, 3, 0.5)


def test_validate_clean_grid():
    assert validate(build_uniform(1.0, 7)) == []
    assert validate(build_graded(3.0, 11, 2.5)) == []


def test_validate_repeated_node():
    x = np.array([-1.0, -0.5, -0.5, 0.5, 1.0])
    assert validate(Grid(1.0, x)) == ["h_1 = 0 at index 1"]


def test_validate_length_mismatch_reported_once():
    x = np.array([-1.0, -0.5, 0.0, 0.5, 1.2])
    problems = validate(Grid(1.0, x))
    assert sum("sum of spacings" in p for p in problems) == 1


def test_arrays_are_read_only():
    g = build_uniform(1.0, 3)
    for arr in (g.x, g.h, g.weights):
        with pytest.raises(ValueError):
            arr[0] = 5.0


def test_json_round_trip():
    g = build_graded(1.3, 6, 1.7)
    doc = g.to_json()
    assert set(doc) == {"a", "N", "x"}
    assert Grid.from_json(doc) == g


def test_from_json_rejects_invalid_grid():
    with pytest.raises(InvalidArgument):
        Grid.from_json({"a": 1.0, "x": [-1.0, 0.2, 0.1, 1.0]})
    with pytest.raises(InvalidArgument):
        Grid.from_json({"a": 1.0, "N": 3, "x": [-1.0, 0.0, 1.0]})
