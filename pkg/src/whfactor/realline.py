"""Sampled functions on the real line and the Cauchy (Hardy space) splitting.

The default discretisation maps the real line onto the unit circle through

    t = i (1 + z) / (1 - z),    z = (t - i) / (t + i),

and samples at the equispaced, half-offset angles ``phi_j = 2 pi (j + 1/2) / n``,
so that ``z = 1`` (the point at infinity) is never a node. Functions analytic
in the upper half-plane become functions analytic inside the disc, so the
plus/minus projection is a one-sided truncation of a Laurent series and can be
done with one FFT.

More precisely, for ``f`` in L2 we expand ``h(z) = (t + i) f(t)`` on the circle.
The map ``f -> h / sqrt(pi)`` is unitary from L2(R) onto L2 of the circle (with
normalised arc length), it sends the Hardy space of the upper half-plane to the
span of ``z^k, k >= 0`` and that of the lower half-plane to ``k < 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceFailure, NonDecayingInput

DEFAULT_GRID_SIZE = 2**12
DEFAULT_TOL = 1e-8
MIN_GRID_SIZE = 16

MOEBIUS = "moebius-mapped"
UNIFORM = "truncated-uniform"

# relative magnitude allowed at the extreme nodes of a function declared to decay
DECAY_SANITY = 1e-3


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered sample points on the real line with quadrature weights."""

    nodes: np.ndarray
    weights: np.ndarray
    map_kind: str = MOEBIUS

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        n = nodes.size
        if n < MIN_GRID_SIZE or not _is_power_of_two(n):
            raise ValueError(f"grid size must be a power of two >= {MIN_GRID_SIZE}, got {n}")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be strictly positive")
        if self.map_kind not in (MOEBIUS, UNIFORM):
            raise ValueError(f"unknown map_kind {self.map_kind!r}")
        object.__setattr__(self, "nodes", _readonly(nodes))
        object.__setattr__(self, "weights", _readonly(weights))

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def angles(self) -> np.ndarray:
        """Circle angles of the nodes (Moebius grids only)."""
        self._require_moebius()
        return 2 * np.pi * (np.arange(self.n) + 0.5) / self.n

    @property
    def circle(self) -> np.ndarray:
        """The circle points ``z_j = (t_j - i) / (t_j + i)``."""
        return np.exp(1j * self.angles)

    def _require_moebius(self):
        if self.map_kind != MOEBIUS:
            raise ValueError("operation needs a moebius-mapped grid")

    def refined(self) -> "Grid":
        """Grid of the same kind with twice as many nodes."""
        if self.map_kind == MOEBIUS:
            return moebius_grid(2 * self.n)
        half_width = self.nodes[-1]
        return truncated_uniform_grid(2 * self.n, half_width)

    def coarsened(self) -> "Grid":
        if self.map_kind == MOEBIUS:
            return moebius_grid(self.n // 2)
        return truncated_uniform_grid(self.n // 2, self.nodes[-1])

    def to_dict(self) -> dict:
        d = {"map_kind": self.map_kind, "n": self.n}
        if self.map_kind == UNIFORM:
            d["half_width"] = float(self.nodes[-1])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        if d["map_kind"] == MOEBIUS:
            return moebius_grid(int(d["n"]))
        return truncated_uniform_grid(int(d["n"]), float(d["half_width"]))


@lru_cache(maxsize=32)
def moebius_grid(n: int = DEFAULT_GRID_SIZE) -> Grid:
    """Images of ``n`` half-offset equispaced circle points, ``t_j = -cot(phi_j / 2)``."""
    if not _is_power_of_two(n) or n < MIN_GRID_SIZE:
        raise ValueError(f"grid size must be a power of two >= {MIN_GRID_SIZE}, got {n}")
    phi = 2 * np.pi * (np.arange(n) + 0.5) / n
    t = -1.0 / np.tan(phi / 2)
    # dt = (1 + t^2) / 2 dphi, trapezoidal rule in phi
    w = np.pi * (1 + t**2) / n
    return Grid(t, w, MOEBIUS)


@lru_cache(maxsize=32)
def truncated_uniform_grid(n: int, half_width: float = 100.0) -> Grid:
    t = np.linspace(-half_width, half_width, n)
    h = t[1] - t[0]
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return Grid(t, w, UNIFORM)


def _compose(op, a, b):
    if a is None or b is None:
        return None
    return lambda t: op(a(t), b(t))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples of a function on a grid plus its (common) limit at +-infinity.

    ``source`` optionally keeps the closed-form callable the samples came from;
    it is used for grid refinement checks and is never serialised.
    """

    grid: Grid
    values: np.ndarray
    limit: complex = 0j
    source: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("GridFunction values must be finite at every node")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "limit", complex(self.limit))

    @classmethod
    def from_callable(cls, func: Callable, grid: Grid, limit: complex = 0j) -> "GridFunction":
        values = np.asarray(func(grid.nodes), dtype=complex) * np.ones(grid.n)
        return cls(grid, values, limit, func)

    @classmethod
    def constant(cls, value: complex, grid: Grid) -> "GridFunction":
        value = complex(value)
        return cls(grid, np.full(grid.n, value), value, lambda t: np.full(np.shape(t), value, dtype=complex))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def on_grid(self, grid: Grid) -> "GridFunction":
        """Re-sample the source callable on another grid."""
        if grid is self.grid:
            return self
        if self.source is None:
            raise ValueError("resampling needs a GridFunction built from a callable")
        return GridFunction.from_callable(self.source, grid, self.limit)

    def _binary(self, other, op):
        if isinstance(other, GridFunction):
            if other.grid is not self.grid and other.grid.n != self.grid.n:
                raise ValueError("GridFunctions live on different grids")
            return GridFunction(self.grid, op(self.values, other.values),
                                op(self.limit, other.limit), _compose(op, self.source, other.source))
        c = complex(other)
        src = None if self.source is None else (lambda t, s=self.source: op(s(t), c))
        return GridFunction(self.grid, op(self.values, c), op(self.limit, c), src)

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        src = None if self.source is None else (lambda t, s=self.source: -s(t))
        return GridFunction(self.grid, -self.values, -self.limit, src)

    def decaying_part(self) -> "GridFunction":
        """``f - f(infinity)``."""
        return self - self.limit

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "values": [[float(v.real), float(v.imag)] for v in self.values],
            "limit": [self.limit.real, self.limit.imag],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GridFunction":
        grid = Grid.from_dict(d["grid"])
        vals = np.array([complex(re, im) for re, im in d["values"]])
        return cls(grid, vals, complex(*d["limit"]))

    @classmethod
    def from_json(cls, s: str) -> "GridFunction":
        return cls.from_dict(json.loads(s))

    def to_csv(self) -> str:
        lines = ["t,re,im"]
        lines += [f"{t!r},{v.real!r},{v.imag!r}" for t, v in zip(self.t.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, grid: Grid, limit: complex = 0j) -> "GridFunction":
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        t = np.array([float(r[0]) for r in rows])
        if not np.allclose(t, grid.nodes, rtol=1e-14, atol=0):
            raise ValueError("CSV nodes do not match the grid")
        vals = np.array([complex(float(r[1]), float(r[2])) for r in rows])
        return cls(grid, vals, limit)


def _require_decay(f: GridFunction):
    if abs(f.limit) != 0:
        raise NonDecayingInput(f"function has limit {f.limit} at infinity; subtract it first")
    peak = np.max(np.abs(f.values))
    ends = max(abs(f.values[0]), abs(f.values[-1]))
    if peak > 0 and ends > DECAY_SANITY * peak:
        raise NonDecayingInput(
            f"|f| at the extreme nodes is {ends / peak:.2e} of its maximum; "
            "the function does not decay on this grid")


def l2_norm(f: GridFunction) -> float:
    """Quadrature approximation of the L2 norm of a decaying function."""
    _require_decay(f)
    return _l2(f.values, f.grid)


def _l2(values, grid: Grid) -> float:
    return float(np.sqrt(np.sum(grid.weights * np.abs(values) ** 2)))


def _modes(n: int) -> np.ndarray:
    # 0..n/2-1, then -n/2..-1; the Nyquist mode is counted as negative
    return np.fft.fftfreq(n, 1.0 / n).astype(int)


def _spectrum(values, grid: Grid) -> np.ndarray:
    """Raw DFT of ``h = (t + i) f`` divided by n (phases relative to the offset grid)."""
    grid._require_moebius()
    h = (grid.nodes + 1j) * values
    return np.fft.fft(h) / grid.n


def laurent_coefficients(f: GridFunction):
    """Laurent coefficients of ``h(z) = (t + i) f(t)`` on the unit circle.

    Returns ``(k, c)`` with integer modes ``k`` in FFT order.
    """
    n = f.grid.n
    k = _modes(n)
    return k, _spectrum(f.values, f.grid) * np.exp(-1j * np.pi * k / n)


def hardy_split_values(values, grid: Grid):
    """Plus/minus parts of decaying samples, without any checks."""
    n = grid.n
    spec = np.fft.fft((grid.nodes + 1j) * values)
    plus_mask = _modes(n) >= 0
    h_plus = np.fft.ifft(np.where(plus_mask, spec, 0))
    h_minus = np.fft.ifft(np.where(plus_mask, 0, spec))
    return h_plus / (grid.nodes + 1j), h_minus / (grid.nodes + 1j)


def split_with_constant(values, grid: Grid, limit: complex):
    """Split ``f = f_plus + f_minus`` with the constant ``limit`` given to the plus part."""
    fp, fm = hardy_split_values(np.asarray(values) - limit, grid)
    return fp + limit, fm


def resolution_defect(values, grid: Grid) -> float:
    """L2 mass carried by the top quarter of the resolved modes.

    For a well-resolved function this is at rounding level; a large value means
    doubling the grid would change the split.
    """
    n = grid.n
    c = _spectrum(values, grid)
    tail = np.abs(_modes(n)) > 3 * n // 8
    return float(math.sqrt(np.pi) * np.linalg.norm(c[tail]))


def _refinement_change(f: GridFunction) -> float:
    fine = f.on_grid(f.grid.refined())
    _, c1 = laurent_coefficients(f)
    k2, c2 = laurent_coefficients(fine)
    n = f.grid.n
    k1 = _modes(n)
    padded = np.zeros_like(c2)
    padded[np.where(k1 >= 0, k1, 2 * n + k1)] = c1
    return float(math.sqrt(np.pi) * np.linalg.norm(padded - c2))


def cauchy_split(f: GridFunction, tol: float = DEFAULT_TOL, check: bool = True):
    """Additive decomposition ``f = f_plus + f_minus`` into half-plane analytic parts.

    ``f_plus`` extends analytically to the upper half-plane, ``f_minus`` to the
    lower one, and both vanish at infinity.

    Raises
    ------
    NonDecayingInput
        If ``f`` has a nonzero limit at infinity.
    ConvergenceFailure
        If the grid does not resolve ``f``: with a source callable the split is
        recomputed on the doubled grid and compared in L2, otherwise the
        high-frequency tail of the spectrum is inspected.
    """
    _require_decay(f)
    grid = f.grid
    grid._require_moebius()
    if check:
        scale = max(1.0, _l2(f.values, grid))
        change = _refinement_change(f) if f.source is not None else resolution_defect(f.values, grid)
        if change > tol * scale:
            raise ConvergenceFailure(
                f"split changes by {change:.2e} under refinement (tolerance {tol * scale:.2e})")
    fp, fm = hardy_split_values(f.values, grid)
    return GridFunction(grid, fp, 0), GridFunction(grid, fm, 0)


def spectral_support_defect(f: GridFunction, side: str) -> float:
    """L2 mass of ``f`` on the wrong side of the Hardy decomposition.

    For ``side="plus"`` this is the norm of the lower-half-plane component, i.e.
    the Fourier content of ``f`` on the forbidden half-axis; it vanishes exactly
    when ``f`` extends analytically to the upper half-plane.
    """
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    _require_decay(f)
    k = _modes(f.grid.n)
    c = _spectrum(f.values, f.grid)
    forbidden = k < 0 if side == "plus" else k >= 0
    return float(math.sqrt(np.pi) * np.linalg.norm(c[forbidden]))


def analyticity_defect(values, grid: Grid, side: str, growth: int = 0) -> float:
    """Relative spectral defect of samples with at most polynomial growth.

    The samples are divided by ``(t + i)^(growth + 1)`` (plus side) or
    ``(t - i)^(growth + 1)`` (minus side), which keeps analyticity on the side
    being tested and makes the function decay. The result is normalised by the
    L2 norm of the divided function.
    """
    t = grid.nodes
    shift = 1j if side == "plus" else -1j
    g = np.asarray(values) / (t + shift) ** (growth + 1)
    if growth == 0:
        g = g - limit_from_samples(g, grid)
    norm = _l2(g, grid)
    if norm == 0:
        return 0.0
    k = _modes(grid.n)
    c = _spectrum(g, grid)
    forbidden = k < 0 if side == "plus" else k >= 0
    return float(math.sqrt(np.pi) * np.linalg.norm(c[forbidden]) / norm)


def limit_from_samples(values, grid: Grid) -> complex:
    """Value at infinity by trigonometric interpolation at ``z = 1``."""
    n = grid.n
    k = _modes(n)
    c = np.fft.fft(np.asarray(values, dtype=complex)) / n * np.exp(-1j * np.pi * k / n)
    c[k == -n // 2] = 0
    return complex(np.sum(c))
