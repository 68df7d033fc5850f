"""Scalar Wiener-Hopf factorisation on the real line and its L2 error estimates."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (AmbiguousIndex, BranchError, ConvergenceFailure,
                     PreconditionViolated, ZeroOnLine)
from .realline import (DEFAULT_TOL, GridFunction, _l2, cauchy_split,
                       hardy_split_values, l2_norm, limit_from_samples,
                       resolution_defect)

ZERO_FLOOR = 1e-10
INDEX_ROUNDING = 0.1
# a single step of the unwrapped argument larger than this means the grid is too coarse
MAX_ARG_STEP = np.pi / 2


def _arg_steps(values: np.ndarray, limit: complex = 0j) -> np.ndarray:
    """Principal argument increments along the grid, closed through infinity."""
    v = np.asarray(values, dtype=complex)
    inner = np.angle(v[1:] / v[:-1])
    if limit != 0:
        closing = [np.angle(limit / v[-1]), np.angle(v[0] / limit)]
    else:
        closing = [np.angle(v[0] / v[-1])]
    return np.concatenate([inner, closing])


def _raw_index(values, limit) -> float:
    return float(np.sum(_arg_steps(values, limit)) / (2 * np.pi))


def winding_index(f: GridFunction, floor: float = ZERO_FLOOR) -> int:
    """Winding number of a nonvanishing function along the real line.

    The total change of the argument is accumulated node to node and closed
    through the common limit at infinity, so for ``f = (t - i)/(t + i)`` the
    result is 1.

    Raises
    ------
    ZeroOnLine
        If ``min |f|`` on the grid is below ``floor``.
    AmbiguousIndex
        If the accumulated argument is not within 0.1 of a multiple of 2 pi, a
        single step is too large to unwrap, or the half-resolution grid
        disagrees.
    """
    v = f.values
    if np.min(np.abs(v)) < floor or (f.limit != 0 and abs(f.limit) < floor):
        raise ZeroOnLine(f"min |f| = {np.min(np.abs(v)):.3e} below floor {floor:.1e}")
    steps = _arg_steps(v, f.limit)
    if np.max(np.abs(steps)) > MAX_ARG_STEP:
        raise AmbiguousIndex("argument jumps by more than pi/2 between nodes; refine the grid")
    raw = float(np.sum(steps) / (2 * np.pi))
    index = round(raw)
    if abs(raw - index) > INDEX_ROUNDING:
        raise AmbiguousIndex(f"winding {raw:.3f} is not close to an integer")
    if round(_raw_index(v[::2], f.limit)) != index:
        raise AmbiguousIndex("winding number changes on the half-resolution grid")
    return int(index)


def _tracked_arg(v: np.ndarray, limit: complex):
    """Continuous argument along the grid starting from Arg(limit) at -infinity."""
    steps = _arg_steps(v, limit)
    if np.max(np.abs(steps)) > MAX_ARG_STEP:
        raise BranchError("argument is under-resolved by the grid")
    n = v.size
    start = np.angle(limit) + steps[-1]
    arg = start + np.concatenate([[0.0], np.cumsum(steps[:n - 1])])
    return arg, float(np.sum(steps))


def continuous_log(values, limit: complex) -> np.ndarray:
    """Logarithm tracked continuously along the grid, equal to Log(limit) at -infinity.

    The caller must have removed any winding; a leftover mismatch at +infinity
    raises BranchError.
    """
    v = np.asarray(values, dtype=complex)
    if np.any(v == 0) or limit == 0:
        raise ZeroOnLine("logarithm of a function with a zero")
    arg, total = _tracked_arg(v, limit)
    if abs(total) > 1e-6:
        raise BranchError(f"argument does not return to its start (change {total:.3e})")
    return np.log(np.abs(v)) + 1j * arg


def continuous_sqrt(values, limit: complex) -> np.ndarray:
    """Square root continuous along the line, principal at -infinity.

    Works for functions of even winding number; odd winding raises BranchError.
    """
    v = np.asarray(values, dtype=complex)
    arg, total = _tracked_arg(v, limit)
    turns = total / (2 * np.pi)
    if abs(turns - round(turns)) > INDEX_ROUNDING or round(turns) % 2:
        raise BranchError("square root is not single valued on the line (odd winding)")
    return np.sqrt(np.abs(v)) * np.exp(0.5j * arg)


@dataclass(frozen=True)
class ScalarFactorization:
    """``K = plus * m^index * minus`` with ``m(t) = (t - i)/(t + i)``."""

    plus: GridFunction
    minus: GridFunction
    index: int
    residual: float

    def reconstruct(self) -> np.ndarray:
        return self.plus.values * self.plus.grid.circle ** self.index * self.minus.values

    def to_dict(self) -> dict:
        return {"kappa": self.index, "residual": self.residual,
                "plus": self.plus.to_dict(), "minus": self.minus.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def factorize_scalar(K: GridFunction, tol: float = DEFAULT_TOL,
                     floor: float = ZERO_FLOOR) -> ScalarFactorization:
    """Multiplicative Wiener-Hopf factorisation of a nonvanishing scalar symbol.

    The index is removed with a power of ``m(t) = (t - i)/(t + i)``, the
    logarithm of the reduced symbol is split additively and exponentiated.
    The factors are normalised so that ``minus -> 1`` and ``plus -> K(inf)``.
    """
    grid = K.grid
    limit = K.limit
    if limit == 0:
        # undeclared limit: read it off the samples
        limit = limit_from_samples(K.values, grid)
    if abs(limit) < floor:
        raise ZeroOnLine("symbol vanishes at infinity")
    K = GridFunction(grid, K.values, limit, K.source)
    kappa = winding_index(K, floor)
    reduced = K.values * grid.circle ** (-kappa)
    log_limit = np.log(limit)
    log_k = continuous_log(reduced, limit) - log_limit
    scale = max(1.0, _l2(log_k, grid))
    defect = resolution_defect(log_k, grid)
    if defect > tol * scale:
        raise ConvergenceFailure(f"log K is under-resolved (tail mass {defect:.2e})")
    lp, lm = hardy_split_values(log_k, grid)
    plus = GridFunction(grid, limit * np.exp(lp), limit)
    minus = GridFunction(grid, np.exp(lm), 1.0)
    recon = plus.values * grid.circle ** kappa * minus.values
    residual = float(np.max(np.abs(recon - K.values)))
    return ScalarFactorization(plus, minus, kappa, residual)


@dataclass(frozen=True)
class ScalarBoundReport:
    """Guaranteed bound of the additive or multiplicative estimate vs. measured factor errors."""

    epsilon: float
    guaranteed: float
    measured_plus: float
    measured_minus: float
    m_lower: Optional[float] = None
    M_upper: Optional[float] = None

    def holds(self, slack: float = 0.0) -> bool:
        return max(self.measured_plus, self.measured_minus) <= self.guaranteed + slack

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "m": self.m_lower, "M": self.M_upper,
                "guaranteed": self.guaranteed, "measured_plus": self.measured_plus,
                "measured_minus": self.measured_minus}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def additive_bound_check(F: GridFunction, F_tilde: GridFunction) -> ScalarBoundReport:
    """Split both functions and compare ``||F_pm - F~_pm||_2`` against ``||F - F~||_2``."""
    eps = l2_norm(F - F_tilde) if F.values is not F_tilde.values else 0.0
    fp, fm = cauchy_split(F)
    gp, gm = cauchy_split(F_tilde)
    grid = F.grid
    return ScalarBoundReport(
        epsilon=eps,
        guaranteed=eps,
        measured_plus=_l2(fp.values - gp.values, grid),
        measured_minus=_l2(fm.values - gm.values, grid),
    )


def multiplicative_bound(m: float, M: float, eps: float) -> float:
    """``5 (M + eps)^(1/2) / (m - eps) * eps``."""
    return 5 * math.sqrt(M + eps) / (m - eps) * eps


def multiplicative_bound_check(K: GridFunction, K_tilde: GridFunction,
                               tol: float = DEFAULT_TOL) -> ScalarBoundReport:
    """Factorise two zero-index symbols and test the multiplicative estimate.

    ``m`` and ``M`` are the extreme moduli over both symbols.
    """
    if abs(K.limit - K_tilde.limit) > 1e-14 * max(1.0, abs(K.limit)):
        raise PreconditionViolated("symbols must share their limit at infinity")
    grid = K.grid
    eps = _l2(K.values - K_tilde.values, grid)
    both = np.abs(np.concatenate([K.values, K_tilde.values]))
    m, M = float(both.min()), float(both.max())
    if eps >= m:
        raise PreconditionViolated(f"epsilon = {eps:.3e} is not below m = {m:.3e}")
    a = factorize_scalar(K, tol)
    b = factorize_scalar(K_tilde, tol)
    if a.index != 0 or b.index != 0:
        raise PreconditionViolated(f"indices must vanish, got {a.index} and {b.index}")
    return ScalarBoundReport(
        epsilon=eps,
        guaranteed=multiplicative_bound(m, M, eps),
        measured_plus=_l2(a.plus.values - b.plus.values, grid),
        measured_minus=_l2(a.minus.values - b.minus.values, grid),
        m_lower=m,
        M_upper=M,
    )
