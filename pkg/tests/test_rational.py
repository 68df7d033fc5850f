import warnings

import numpy as np
import pytest

from whfactor import (DegreeMismatch, GridFunction, MaxDegreeReached, PoleEvaluation,
                      RationalFunction, RealAxisSingularity, evaluate, fit_rational, moebius_grid,
                      pair_log, pair_sqrt, rational_split)

from conftest import sqrt_c

T = np.linspace(-7, 7, 57)


def test_from_coefficients_matches_polyval():
    R = RationalFunction.from_coefficients([1, 0, 1], [1, 0, 4])
    np.testing.assert_allclose(R(T), (T**2 + 1) / (T**2 + 4))
    assert R.degree == (2, 2) and R.limit == pytest.approx(1.0)


def test_limit_by_degree():
    assert RationalFunction([], [1j], 2.0).limit == 0
    assert RationalFunction([1j, -1j], [2j, -2j], 3.0).limit == 3.0


def test_real_pole_rejected():
    with pytest.raises(RealAxisSingularity):
        RationalFunction([], [1.0], 1.0)


def test_evaluate_at_pole():
    R = RationalFunction([], [1j], 1.0)
    with pytest.raises(PoleEvaluation):
        evaluate(R, np.array([1j]))


def test_arithmetic_matches_pointwise():
    a = RationalFunction([2j], [-1j], 1.5)
    b = RationalFunction([-3j], [1 + 1j], -0.5j)
    np.testing.assert_allclose((a * b)(T), a(T) * b(T))
    np.testing.assert_allclose((a / b)(T), a(T) / b(T))
    np.testing.assert_allclose((a + b)(T), a(T) + b(T))
    np.testing.assert_allclose((a - b)(T), a(T) - b(T))
    np.testing.assert_allclose((a ** 3)(T), a(T) ** 3)
    np.testing.assert_allclose((-a)(T), -a(T))


def test_addition_keeps_repeated_poles():
    # both terms have a double pole at i; the sum must not split it
    a = RationalFunction([], [1j, 1j], 1.0)
    b = RationalFunction([0.5j], [1j, 1j], 2.0)
    s = a + b
    assert np.allclose(s.poles, [1j, 1j])
    np.testing.assert_allclose(s(T), a(T) + b(T))


def test_cancel():
    R = RationalFunction([1j, 2 - 1j], [1j, 3j], 1.0).cancel()
    assert R.degree == (1, 1)


def test_residues_of_partial_fractions():
    R = RationalFunction.from_coefficients([3, 1], [1, 0, 1], strict=False)  # (3t + 1)/(t^2 + 1)
    res = dict(zip(np.round(R.poles, 12), R.residues()))
    assert res[1j] == pytest.approx((3j + 1) / 2j)
    assert res[-1j] == pytest.approx((-3j + 1) / -2j)


def test_solve():
    R = RationalFunction([2j, -1 - 1j], [1j, 3 - 2j], 0.7)
    for w in (0.3, 2 - 1j):
        x = R.solve(w)
        assert x.size == 2
        np.testing.assert_allclose(R(x), w, atol=1e-10)


def test_exact_square_root():
    q = RationalFunction([1j, 1j, -2j, -2j], [3j, 3j, -1j, -1j], 4.0)
    assert q.is_perfect_square()
    r = q.sqrt()
    np.testing.assert_allclose(r(T) ** 2, q(T))
    assert not RationalFunction([1j], [2j], 1.0).is_perfect_square()


def test_pair_sqrt_and_log():
    R = RationalFunction([1 + 1j, -2j], [3j, 0.5 - 1j], 2.0)
    s = pair_sqrt(R, T)
    np.testing.assert_allclose(s**2, R(T))
    assert np.max(np.abs(np.diff(s))) < 0.5
    np.testing.assert_allclose(np.exp(pair_log(R, T)), R(T))
    assert np.max(np.abs(np.diff(pair_log(R, T).imag))) < 1.0


def test_split_structure():
    R = RationalFunction([1 + 2j, -1j, 3 - 0.5j], [2j, 4j, -0.3 - 1j], 1.7)
    plus, minus, kappa = rational_split(R)
    # two zeros below, one pole below
    assert kappa == -1
    assert np.all(plus.zeros.imag < 0) and np.all(plus.poles.imag < 0)
    assert np.all(minus.zeros.imag > 0) and np.all(minus.poles.imag > 0)
    assert minus.limit == pytest.approx(1.0) and plus.limit == pytest.approx(1.7)
    m = (T - 1j) / (T + 1j)
    np.testing.assert_allclose(plus(T) * m**kappa * minus(T), R(T))


def test_split_needs_equal_degrees():
    with pytest.raises(DegreeMismatch):
        rational_split(RationalFunction([], [1j], 1.0))


def test_serialisation():
    R = RationalFunction([1 + 2j], [-1j], 0.5 - 1j)
    S = RationalFunction.from_json(R.to_json())
    np.testing.assert_array_equal(S.zeros, R.zeros)
    np.testing.assert_array_equal(S.poles, R.poles)
    assert S.gain == R.gain


def test_fit_recovers_rational(small_grid):
    R = RationalFunction([0.5 + 1j, -2j], [2j, -1 - 1.5j], 1.2)
    f = GridFunction.from_callable(R, small_grid, R.limit)
    fit = fit_rational(f, 6, tol=1e-12)
    assert fit.converged and fit.degree == (2, 2)
    np.testing.assert_allclose(np.sort_complex(fit.approximant.poles), np.sort_complex(R.poles), atol=1e-8)


def test_fit_sqrt_symbol(small_grid):
    f = GridFunction.from_callable(lambda t: sqrt_c((t**2 + 1) / (t**2 + 4)), small_grid, 1.0)
    fit = fit_rational(f, 16, tol=1e-10)
    assert fit.max_error <= 1e-10
    assert fit.approximant.limit == 1.0
    assert not np.any(np.abs(fit.approximant.poles.imag) < 1e-6)


def test_fit_cap_warns(small_grid):
    f = GridFunction.from_callable(lambda t: sqrt_c((t**2 + 1) / (t**2 + 4)), small_grid, 1.0)
    with pytest.warns(MaxDegreeReached):
        fit = fit_rational(f, 4, tol=1e-12)
    assert not fit.converged and fit.degree[0] <= 4


def test_fit_without_source(small_grid):
    t = small_grid.nodes
    f = GridFunction(small_grid, (t + 2j) / (t + 1j), 1.0)
    fit = fit_rational(f, 4, tol=1e-11)
    assert fit.converged


def test_degree_mismatch(small_grid):
    f = GridFunction.constant(1.0, small_grid)
    with pytest.raises(DegreeMismatch):
        fit_rational(f, (4, 3))


def test_fit_error_decreases_with_cap(small_grid):
    f = GridFunction.from_callable(lambda t: sqrt_c((t**2 + 1) / (t**2 + 4)), small_grid, 1.0)
    errs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MaxDegreeReached)
        for cap in range(0, 13, 2):
            errs.append(fit_rational(f, cap, tol=1e-15).max_error)
    assert all(b <= a for a, b in zip(errs, errs[1:]))
