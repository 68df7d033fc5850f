"""Built-in example symbols together with their closed-form factors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .dk import DKMatrix, EntireMatrixJ
from .rational import RationalFunction, rational_split
from .realline import Grid, GridFunction


def _sq(a):
    return np.sqrt(np.asarray(a, dtype=complex))


@dataclass(frozen=True)
class ScalarSymbol:
    name: str
    func: Callable
    limit: complex
    kappa: Optional[int] = None
    plus: Optional[Callable] = None
    minus: Optional[Callable] = None

    def sample(self, grid: Grid) -> GridFunction:
        return GridFunction.from_callable(self.func, grid, self.limit)


@dataclass(frozen=True)
class DKSymbol:
    name: str
    f: Callable
    limit: complex
    J: Tuple
    indices: Optional[Tuple[int, int]] = None

    def build(self, grid: Grid) -> DKMatrix:
        return DKMatrix(GridFunction.from_callable(self.f, grid, self.limit), EntireMatrixJ(self.J))


SCALAR_SYMBOLS: Dict[str, ScalarSymbol] = {
    "one": ScalarSymbol("one", lambda t: np.ones_like(t, dtype=complex), 1.0, 0,
                        lambda t: np.ones_like(t, dtype=complex), lambda t: np.ones_like(t, dtype=complex)),
    # sqrt((t^2 + 1)/(t^2 + 4)) with its factors by inspection
    "f-example-k2": ScalarSymbol(
        "f-example-k2",
        lambda t: _sq((t**2 + 1) / (t**2 + 4)), 1.0, 0,
        lambda t: _sq(t + 1j) / _sq(t + 2j),
        lambda t: _sq(t - 1j) / _sq(t - 2j)),
    # sqrt((t + 2i)(t + 3i)/((t - 2i)(t - 3i))), index -1
    "k-third-ex": ScalarSymbol(
        "k-third-ex",
        lambda t: _sq(t + 2j) * _sq(t + 3j) / (_sq(t - 2j) * _sq(t - 3j)), 1.0, -1,
        lambda t: _sq(t + 2j) * _sq(t + 3j) / (t + 1j),
        lambda t: (t - 1j) / (_sq(t - 2j) * _sq(t - 3j))),
}

J_K = ((0, 1), (-2, 0))

DK_SYMBOLS: Dict[str, DKSymbol] = {
    "k1": DKSymbol("k1", lambda t: _sq((t**2 + 1) / (t**2 + 4)), 1.0, J_K, (0, 0)),
    "k2": DKSymbol("k2", lambda t: _sq(t + 2j) * _sq(t + 1j) / (_sq(t - 2j) * _sq(t - 1j)), 1.0, J_K, (-1, -1)),
}


def parse_coefficients(text: str) -> np.ndarray:
    return np.array([complex(c.strip().replace(" ", "")) for c in text.split(",")])


def parse_scalar_symbol(spec: str) -> ScalarSymbol:
    """A built-in name or ``rational:NUM/DEN`` with comma-separated coefficients, highest power first.

    ``rational:1,0,1/1,0,4`` is ``(t^2 + 1)/(t^2 + 4)``. Raises ValueError.
    """
    if spec in SCALAR_SYMBOLS:
        return SCALAR_SYMBOLS[spec]
    if spec.startswith("rational:"):
        body = spec[len("rational:"):]
        if body.count("/") != 1:
            raise ValueError("rational literal must look like rational:NUM/DEN")
        num, den = (parse_coefficients(s) for s in body.split("/"))
        R = RationalFunction.from_coefficients(num, den)
        plus, minus, kappa = rational_split(R)
        return ScalarSymbol(spec, R, R.limit, kappa, plus, minus)
    raise ValueError(f"unknown symbol {spec!r}; built-ins are {sorted(SCALAR_SYMBOLS)}")
