import numpy as np
import pytest

from whfactor.symbols import DK_SYMBOLS, SCALAR_SYMBOLS, parse_scalar_symbol

T = np.linspace(-9, 9, 41)


@pytest.mark.parametrize("name", sorted(SCALAR_SYMBOLS))
def test_closed_forms_reconstruct_symbol(name):
    sym = SCALAR_SYMBOLS[name]
    m = (T - 1j) / (T + 1j)
    np.testing.assert_allclose(sym.plus(T) * m**sym.kappa * sym.minus(T), sym.func(T), atol=1e-14)


def test_rational_literal():
    sym = parse_scalar_symbol("rational:1,0,1/1,0,4")
    np.testing.assert_allclose(sym.func(T), (T**2 + 1) / (T**2 + 4))
    assert sym.kappa == 0


@pytest.mark.parametrize("bad", ["", "rational:", "rational:1/2/3", "rational:a/1", "k9"])
def test_bad_literals(bad):
    with pytest.raises(ValueError):
        parse_scalar_symbol(bad)


def test_dk_symbols_share_j():
    assert DK_SYMBOLS["k1"].J == DK_SYMBOLS["k2"].J
