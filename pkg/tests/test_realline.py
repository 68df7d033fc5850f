import json

import numpy as np
import pytest

from whfactor import (ConvergenceFailure, GridFunction, NonDecayingInput, analyticity_defect,
                      cauchy_split, l2_norm, limit_from_samples, moebius_grid,
                      spectral_support_defect, truncated_uniform_grid)
from whfactor.realline import laurent_coefficients


def test_grid_nodes_are_sorted_and_symmetric():
    g = moebius_grid(256)
    assert np.all(np.diff(g.nodes) > 0)
    np.testing.assert_allclose(g.nodes, -g.nodes[::-1], atol=1e-9)
    np.testing.assert_allclose(np.abs(g.circle), 1.0)


def test_grid_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        moebius_grid(300)


def test_quadrature_integrates_lorentzian(small_grid):
    # integral of 1/(1 + t^2)^2 over the line is pi/2
    f = GridFunction.from_callable(lambda t: 1 / (t**2 + 1), small_grid, 0)
    assert l2_norm(f) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-12)


def test_split_of_simple_poles():
    g = moebius_grid(8192)
    t = g.nodes
    f = GridFunction.from_callable(lambda t: 1 / (t + 1j) + 2 / (t - 3j), g, 0)
    fp, fm = cauchy_split(f)
    np.testing.assert_allclose(fp.values, 1 / (t + 1j), atol=1e-12)
    np.testing.assert_allclose(fm.values, 2 / (t - 3j), atol=1e-12)


def test_split_reproduces_function(small_grid):
    f = GridFunction.from_callable(lambda t: np.exp(-t**2) * np.cos(t), small_grid, 0)
    fp, fm = cauchy_split(f, check=False)
    np.testing.assert_allclose(fp.values + fm.values, f.values, atol=1e-14)


def test_split_rejects_nonzero_limit(small_grid):
    with pytest.raises(NonDecayingInput):
        cauchy_split(GridFunction.constant(1.0, small_grid))


def test_split_rejects_slow_decay(small_grid):
    f = GridFunction.from_callable(lambda t: 1 / np.sqrt(1 + np.abs(t)), small_grid, 0)
    with pytest.raises(NonDecayingInput):
        cauchy_split(f)


def test_split_detects_under_resolution():
    g = moebius_grid(256)
    f = GridFunction.from_callable(lambda t: np.exp(-(t - 40) ** 2), g, 0)
    with pytest.raises(ConvergenceFailure):
        cauchy_split(f)


def test_spectral_support(small_grid):
    t = small_grid.nodes
    plus = GridFunction(small_grid, 1 / (t + 2j) ** 2, 0)
    assert spectral_support_defect(plus, "plus") < 1e-14
    assert spectral_support_defect(plus, "minus") > 0.1


def test_analyticity_defect_with_growth(small_grid):
    t = small_grid.nodes
    assert analyticity_defect(t**2 + 1 / (t + 1j), small_grid, "plus", growth=2) < 1e-13
    assert analyticity_defect(t - 1 / (t + 1j), small_grid, "minus", growth=1) > 1e-3


def test_laurent_coefficients_of_circle_power(small_grid):
    # (t + i) f = z^2 for f = z^2/(t + i)
    z = small_grid.circle
    f = GridFunction(small_grid, z**2 / (small_grid.nodes + 1j), 0)
    k, c = laurent_coefficients(f)
    expected = np.where(k == 2, 1.0, 0.0)
    np.testing.assert_allclose(c, expected, atol=1e-13)


def test_limit_from_samples(small_grid):
    t = small_grid.nodes
    assert limit_from_samples((t + 2j) / (t - 5j), small_grid) == pytest.approx(1.0, abs=1e-12)


def test_gridfunction_arithmetic_keeps_source(small_grid):
    a = GridFunction.from_callable(lambda t: 1 / (t**2 + 1), small_grid, 0)
    b = GridFunction.constant(2.0, small_grid)
    c = (a + b) * a
    assert c.limit == 0
    fine = c.on_grid(moebius_grid(2048))
    t = fine.grid.nodes
    np.testing.assert_allclose(fine.values, (1 / (t**2 + 1) + 2) / (t**2 + 1))


def test_gridfunction_serialisation_roundtrip(small_grid):
    f = GridFunction.from_callable(lambda t: (t + 1j) / (t + 3j), small_grid, 1.0)
    g = GridFunction.from_json(f.to_json())
    np.testing.assert_array_equal(g.values, f.values)
    assert g.limit == f.limit
    h = GridFunction.from_csv(f.to_csv(), small_grid, f.limit)
    np.testing.assert_array_equal(h.values, f.values)
    json.loads(f.to_json())


def test_truncated_uniform_grid():
    g = truncated_uniform_grid(256, 50.0)
    assert g.nodes[0] == pytest.approx(-50.0) and g.nodes[-1] == pytest.approx(50.0)
    f = GridFunction.from_callable(lambda t: np.exp(-t**2), g, 0)
    assert l2_norm(f) ** 2 == pytest.approx(np.sqrt(np.pi / 2), rel=1e-10)
