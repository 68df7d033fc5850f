import json

import numpy as np
import pytest

from whfactor import (DKMatrix, EntireMatrixJ, GridFunction, GrowthUnsafe, MismatchedJ,
                      PreconditionViolated, RationalFunction, UnsupportedJ, WindingObstruction,
                      ZeroOnLine, dk_commutative_product, dk_factorize, dk_parameters,
                      dk_partial_indices, winding_index,
                      rational_dk_factorize, validate_dk)
from whfactor.dk import matmul
from whfactor.symbols import DK_SYMBOLS, J_K

from conftest import sqrt_c


def _det(a):
    return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]


def test_j_structure():
    J = EntireMatrixJ(J_K)
    assert J.trace_zero and J.square_scalar and J.is_constant
    assert J.constant_antidiagonal() == (1, -2)
    assert J.delta_sq_degree == 0
    Jt = EntireMatrixJ([[0, 1], [[4, 0, 1], 0]])
    assert Jt.delta_sq_degree == 2 and Jt.max_entry_degree == 2
    assert not EntireMatrixJ([[1, 0], [0, 2]]).trace_zero
    assert not EntireMatrixJ([[0, [0, 1]], [1, [0, 1]]]).square_scalar


def test_j_rejects_non_polynomial():
    with pytest.raises(TypeError):
        EntireMatrixJ([[0, "1/t"], [1, 0]])


def test_j_serialisation():
    J = EntireMatrixJ([[[0, 1], [1, 0, 2]], [[3], [0, -1]]])
    K = EntireMatrixJ.from_dict(J.to_dict())
    assert K.same_as(J)


def test_validate_reports_without_raising(grid):
    f = GridFunction.constant(0.1, grid)
    diag = validate_dk(DKMatrix(f, EntireMatrixJ([[1, 0], [0, 1]])))
    assert not diag.valid and diag.messages
    assert validate_dk(DK_SYMBOLS["k1"].build(grid)).valid


@pytest.mark.parametrize("name", ["k1", "k2"])
def test_parameters_reproduce_symbol(grid, name):
    K = DK_SYMBOLS[name].build(grid)
    p = dk_parameters(K)
    np.testing.assert_allclose(p.assemble(), K.values(), atol=1e-12)


@pytest.mark.parametrize("name", ["k1", "k2"])
def test_factorisation(grid, name):
    sym = DK_SYMBOLS[name]
    K = sym.build(grid)
    fac = dk_factorize(K)
    assert fac.partial_indices == sym.indices
    np.testing.assert_allclose(fac.reconstruct(), K.values(), atol=1e-12)
    assert fac.max_analyticity_defect() < 1e-10
    # det K_plus det K_minus m^(k1 + k2) = det K = 1 - Delta^2 f^2
    m = grid.circle
    det = _det(fac.plus) * _det(fac.minus) * m ** sum(fac.partial_indices)
    np.testing.assert_allclose(det, 1 + 2 * K.f.values**2, atol=1e-12)


@pytest.mark.parametrize("name", ["k1", "k2"])
def test_partial_indices(grid, name):
    sym = DK_SYMBOLS[name]
    K = sym.build(grid)
    k = dk_partial_indices(K)
    assert k == sym.indices
    # their sum is the winding of det K
    det = GridFunction(grid, K.determinant(), 1 + 2 * K.f.limit**2)
    assert sum(k) == winding_index(det)


def test_partial_indices_need_constant_antidiagonal(grid):
    K = DKMatrix(GridFunction.constant(0.1, grid), EntireMatrixJ([[0, 1], [[4, 0, 1], 0]]))
    with pytest.raises(UnsupportedJ):
        dk_partial_indices(K)


def test_zero_symbol_gives_identity(grid):
    K = DKMatrix(GridFunction.constant(0.0, grid), EntireMatrixJ(J_K))
    fac = dk_factorize(K)
    eye = np.broadcast_to(np.eye(2)[:, :, None], fac.plus.shape)
    np.testing.assert_allclose(fac.plus, eye, atol=1e-14)
    np.testing.assert_allclose(fac.minus, eye, atol=1e-14)


def test_polynomial_j(grid):
    J = EntireMatrixJ([[0, 1], [[4, 0, 1], 0]])
    f = GridFunction.from_callable(lambda t: 0.3 / (t**2 + 4), grid, 0)
    K = DKMatrix(f, J)
    fac = dk_factorize(K)
    assert fac.growth == 2
    rel = np.abs(fac.reconstruct() - K.values()) / (1 + np.abs(K.values()))
    assert np.max(rel) < 1e-10
    assert fac.max_analyticity_defect() < 1e-10


def test_growth_unsafe(grid):
    J = EntireMatrixJ([[0, 1], [[0, 0, 0, 1], 0]])
    f = GridFunction.from_callable(lambda t: 0.1 / (t**2 + 1) ** 2, grid, 0)
    with pytest.raises(GrowthUnsafe):
        dk_factorize(DKMatrix(f, J))


def test_invalid_j_rejected(grid):
    f = GridFunction.constant(0.1, grid)
    with pytest.raises(PreconditionViolated):
        dk_factorize(DKMatrix(f, EntireMatrixJ([[1, 0], [0, 1]])))


def test_singular_symbol(grid):
    # 1 + 2 f^2 = 0 where f = i/sqrt(2)
    f = GridFunction.constant(1j / np.sqrt(2), grid)
    with pytest.raises(ZeroOnLine):
        dk_factorize(DKMatrix(f, EntireMatrixJ(J_K)))


def test_winding_obstruction(grid):
    # 1 + Delta f winds while 1 - Delta f does not
    J = EntireMatrixJ([[0, 1], [1, 0]])
    # f = 2m + 2: 1 + f = 3 + 2m has winding 0, 1 - f = -1 - 2m has winding 1
    f = GridFunction.from_callable(lambda t: 2 * (t - 1j) / (t + 1j) + 2, grid, 4.0)
    with pytest.raises(WindingObstruction):
        dk_parameters(DKMatrix(f, J))


def test_commutative_product(grid):
    J = EntireMatrixJ(J_K)
    a = DKMatrix(GridFunction.from_callable(lambda t: 0.2 / (t**2 + 1), grid, 0), J)
    b = DKMatrix(GridFunction.from_callable(lambda t: 0.1 * (t + 2j) / (t + 3j), grid, 0.1), J)
    pa, pb = dk_parameters(a), dk_parameters(b)
    prod = dk_commutative_product(pa, pb)
    np.testing.assert_allclose(prod.assemble(), matmul(a.values(), b.values()), atol=1e-12)
    other = dk_parameters(DKMatrix(a.f, EntireMatrixJ([[0, 1], [-3, 0]])))
    with pytest.raises(MismatchedJ):
        dk_commutative_product(pa, other)


def test_rational_route_matches_cauchy_route(grid):
    R = RationalFunction([1j, -1j], [2j, -2j], 1.0)
    J = EntireMatrixJ(J_K)
    K = DKMatrix(GridFunction.from_callable(R, grid, R.limit), J)
    exact = dk_factorize(K)
    closed = rational_dk_factorize(R, J, grid)
    assert closed.partial_indices == exact.partial_indices
    assert closed.residual < 1e-12
    np.testing.assert_allclose(closed.plus, exact.plus, atol=1e-10)
    np.testing.assert_allclose(closed.minus, exact.minus, atol=1e-10)


def test_rational_route_nonzero_index(grid):
    R = RationalFunction([2j, 1j], [-2j, -1j], 1.0)
    J = EntireMatrixJ(J_K)
    K = DKMatrix(GridFunction.from_callable(R, grid, R.limit), J)
    closed = rational_dk_factorize(R, J, grid)
    # indices from the windings of the sampled symbol
    assert closed.partial_indices == dk_partial_indices(K)
    assert closed.partial_indices != (0, 0)
    assert closed.residual < 1e-12
    assert closed.max_analyticity_defect() < 1e-10


def test_factorisation_json(grid):
    fac = dk_factorize(DK_SYMBOLS["k1"].build(grid))
    d = json.loads(fac.to_json())
    assert d["indices"] == [0, 0]
    assert set(d["plus"]) == {"a11", "a12", "a21", "a22"}


def test_commutative_identity_and_inverse_pair(grid):
    J = EntireMatrixJ(J_K)
    K = DKMatrix(GridFunction.from_callable(lambda t: 0.3 / (t**2 + 1), grid, 0), J)
    p = dk_parameters(K)
    unit = dk_parameters(K.with_f(GridFunction.constant(0.0, grid)))
    np.testing.assert_allclose(dk_commutative_product(p, unit).assemble(), p.assemble(), atol=1e-14)
    # (I + fJ)(I - fJ) = (1 - Delta^2 f^2) I
    q = dk_commutative_product(p, dk_parameters(K.with_f(K.f * -1)))
    np.testing.assert_allclose(q.theta.values, 0, atol=1e-14)
    np.testing.assert_allclose(q.r.values, 1 + 2 * K.f.values**2, atol=1e-14)


def test_constant_f_gives_constant_parameters(grid):
    eps, k = 1e-2, 1.5
    J = EntireMatrixJ([[0, 1], [4, 0]])
    p = dk_parameters(DKMatrix(GridFunction.constant(eps * k, grid), J))
    u = 2 * eps * k
    np.testing.assert_allclose(p.r.values, np.sqrt(1 - u**2), rtol=1e-14)
    np.testing.assert_allclose(p.theta.values, np.log((1 + u) / (1 - u)) / 2, rtol=1e-12)
