"""Daniele-Khrapkov matrices ``K = I + f(t) J(t)`` and their commutative factorisation.

With ``J^2 = Delta^2 I`` every matrix of the form

    rho * (cosh(Delta phi / 2) I + Delta^-1 sinh(Delta phi / 2) J)

commutes with every other one sharing ``J``, and ``I + f J`` takes this form
with ``rho = r = sqrt(1 - Delta^2 f^2)`` and ``phi = theta`` where
``exp(Delta theta) = (1 + Delta f)/(1 - Delta f)``. Factorising the scalar
``r`` multiplicatively and splitting ``theta`` additively therefore factorises
``K``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (ConvergenceFailure, GrowthUnsafe, MismatchedJ,
                     PreconditionViolated, UnsupportedJ, WindingObstruction,
                     ZeroOnLine)
from .rational import RationalFunction, pair_log, pair_sqrt, rational_split
from .realline import (DEFAULT_TOL, Grid, GridFunction, analyticity_defect,
                       hardy_split_values, limit_from_samples,
                       resolution_defect, _l2)
from .scalar import (ZERO_FLOOR, continuous_log, continuous_sqrt,
                     factorize_scalar, winding_index)

DK_TOL = 1e-6


def _as_poly(entry) -> Polynomial:
    if isinstance(entry, Polynomial):
        return Polynomial(np.asarray(entry.coef, dtype=complex))
    if isinstance(entry, (int, float, complex, np.number)):
        return Polynomial([complex(entry)])
    if isinstance(entry, (list, tuple, np.ndarray)) and all(
            isinstance(c, (int, float, complex, np.number)) for c in entry):
        return Polynomial(np.asarray(entry, dtype=complex))
    raise TypeError(f"J entries must be polynomials, got {type(entry).__name__}; "
                    "rational J belongs to the Abrahams reduction")


def _trim(p: Polynomial, tol: float = 1e-14) -> Polynomial:
    c = np.asarray(p.coef, dtype=complex)
    scale = max(1.0, np.max(np.abs(c))) if c.size else 1.0
    nz = np.nonzero(np.abs(c) > tol * scale)[0]
    return Polynomial(c[: nz[-1] + 1] if nz.size else [0j])


def _is_zero(p: Polynomial) -> bool:
    return bool(np.all(_trim(p).coef == 0))


def _degree(p: Polynomial) -> int:
    p = _trim(p)
    return -1 if _is_zero(p) else len(p.coef) - 1


def continuous_branch_sqrt(values) -> np.ndarray:
    """Square root along the grid, principal at the first node and continuous after."""
    s = np.sqrt(np.asarray(values, dtype=complex))
    for j in range(1, s.size):
        if abs(s[j] + s[j - 1]) < abs(s[j] - s[j - 1]):
            s[j:] = -s[j:]
    return s


class EntireMatrixJ:
    """2x2 matrix of polynomials in ``t``.

    Entries are numbers, coefficient sequences (lowest power first) or
    ``numpy.polynomial.Polynomial`` objects.
    """

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("J must be 2x2")
        self.entries = [[_as_poly(e) for e in r] for r in rows]
        a, b = self.entries[0]
        c, d = self.entries[1]
        self._square = [[a * a + b * c, a * b + b * d], [c * a + d * c, c * b + d * d]]

    @property
    def trace_zero(self) -> bool:
        return _is_zero(self.entries[0][0] + self.entries[1][1])

    @property
    def square_scalar(self) -> bool:
        """``J^2 = Delta^2 I`` coefficientwise."""
        s = self._square
        return _is_zero(s[0][1]) and _is_zero(s[1][0]) and _is_zero(s[0][0] - s[1][1])

    @property
    def delta_sq(self) -> Polynomial:
        return _trim(self._square[0][0])

    @property
    def delta_sq_degree(self) -> int:
        return _degree(self.delta_sq)

    @property
    def max_entry_degree(self) -> int:
        return max(_degree(e) for r in self.entries for e in r)

    @property
    def is_constant(self) -> bool:
        return self.max_entry_degree <= 0

    def constant_antidiagonal(self) -> Optional[Tuple[complex, complex]]:
        """``(b, c)`` if ``J = [[0, b], [c, 0]]`` with constants, else None."""
        e = self.entries
        if not self.is_constant or not _is_zero(e[0][0]) or not _is_zero(e[1][1]):
            return None
        return complex(e[0][1].coef[0]), complex(e[1][0].coef[0])

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.empty((2, 2) + t.shape, dtype=complex)
        for i in range(2):
            for j in range(2):
                out[i, j] = self.entries[i][j](t)
        return out

    def delta(self, t) -> np.ndarray:
        """``Delta`` on the nodes: principal root for constant ``Delta^2``, continuous otherwise."""
        d2 = self.delta_sq(np.asarray(t, dtype=float))
        return continuous_branch_sqrt(d2)

    def growth(self) -> int:
        return max(0, self.max_entry_degree)

    def same_as(self, other) -> bool:
        if not isinstance(other, EntireMatrixJ):
            return False
        return all(_is_zero(self.entries[i][j] - other.entries[i][j]) for i in range(2) for j in range(2))

    def to_dict(self) -> dict:
        return {"kind": "polynomial",
                "entries": [[[[c.real, c.imag] for c in e.coef] for e in r] for r in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "EntireMatrixJ":
        return cls([[[complex(*c) for c in e] for e in r] for r in d["entries"]])


class RationalJ:
    """``J_N = [[0, 1/r_N], [r_N, 0]]`` with a rational ``r_N``; ``J_N^2 = I``."""

    trace_zero = True
    square_scalar = True
    is_constant = False

    def __init__(self, r: RationalFunction):
        self.r = r

    @property
    def delta_sq(self) -> Polynomial:
        return Polynomial([1.0 + 0j])

    delta_sq_degree = 0

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        rv = self.r(t)
        out = np.zeros((2, 2) + t.shape, dtype=complex)
        out[0, 1] = 1 / rv
        out[1, 0] = rv
        return out

    def delta(self, t) -> np.ndarray:
        return np.ones(np.shape(t), dtype=complex)

    def poles(self) -> np.ndarray:
        """Singularities of the entries: poles and zeros of ``r_N``."""
        return np.concatenate([self.r.poles, self.r.zeros])

    def growth(self) -> int:
        nz, npl = self.r.degree
        return abs(nz - npl)

    def same_as(self, other) -> bool:
        if not isinstance(other, RationalJ):
            return False
        t = np.linspace(-3, 3, 7)
        return bool(np.allclose(self.r(t), other.r(t), rtol=1e-12, atol=0))

    def to_dict(self) -> dict:
        return {"kind": "rational", "r": self.r.to_dict()}


@dataclass(frozen=True, eq=False)
class DKMatrix:
    """``K(t) = I + f(t) J(t)`` sampled on the grid of ``f``."""

    f: GridFunction
    J: Union[EntireMatrixJ, RationalJ]

    @property
    def grid(self) -> Grid:
        return self.f.grid

    def values(self) -> np.ndarray:
        out = self.f.values * self.J.evaluate(self.grid.nodes)
        out[0, 0] += 1
        out[1, 1] += 1
        return out

    def delta(self) -> np.ndarray:
        return self.J.delta(self.grid.nodes)

    def delta_f(self) -> np.ndarray:
        return self.delta() * self.f.values

    def delta_f_limit(self) -> complex:
        if self.J.delta_sq_degree <= 0:
            return complex(self.delta()[0] * self.f.limit)
        # Delta itself is not smooth at infinity, but Delta^2 f^2 is
        sq = limit_from_samples(self.J.delta_sq(self.grid.nodes) * self.f.values**2, self.grid)
        root = np.sqrt(sq)
        last = self.delta_f()[-1]
        return complex(root if abs(last - root) <= abs(last + root) else -root)

    def determinant(self) -> np.ndarray:
        return 1 - self.delta_f() ** 2

    def with_f(self, f: GridFunction) -> "DKMatrix":
        return DKMatrix(f, self.J)

    def on_grid(self, grid: Grid) -> "DKMatrix":
        return DKMatrix(self.f.on_grid(grid), self.J)

    def to_dict(self) -> dict:
        return {"J": self.J.to_dict(), "f": self.f.to_dict()}


@dataclass(frozen=True)
class DKDiagnostics:
    polynomial: bool
    trace_zero: bool
    square_scalar: bool
    det_nonvanishing: bool
    min_abs_det: float
    delta_sq_degree: Optional[int]
    growth_safe: bool
    messages: Tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return self.polynomial and self.trace_zero and self.square_scalar and self.det_nonvanishing

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["messages"] = list(self.messages)
        d["valid"] = self.valid
        return d


def validate_dk(K: DKMatrix, floor: float = ZERO_FLOOR) -> DKDiagnostics:
    """Check the structural constraints of a Daniele-Khrapkov matrix; never raises."""
    msgs = []
    J = K.J
    polynomial = isinstance(J, EntireMatrixJ)
    if not polynomial:
        msgs.append("J entries must be polynomial; rational J goes through the Abrahams reduction")
    trace_zero = bool(J.trace_zero)
    if not trace_zero:
        msgs.append("trace of J is not identically zero")
    square = bool(J.square_scalar)
    if not square:
        msgs.append("J^2 is not a scalar multiple of I")
    if polynomial and square:
        deg = J.delta_sq_degree
        det = K.determinant()
    else:
        deg = J.delta_sq_degree if square else None
        v = K.values()
        det = v[0, 0] * v[1, 1] - v[0, 1] * v[1, 0]
    min_det = float(np.min(np.abs(det)))
    det_ok = min_det > floor
    if not det_ok:
        msgs.append(f"det K vanishes on the line (min |det| = {min_det:.2e})")
    growth_safe = deg is not None and deg <= 2
    if deg is not None and deg > 2:
        msgs.append(f"deg Delta^2 = {deg} > 2: factors grow exponentially")
    return DKDiagnostics(polynomial, trace_zero, square, det_ok, min_det, deg, growth_safe, tuple(msgs))


def _cosh_sinhc(delta, phi):
    """``cosh(Delta phi / 2)`` and ``Delta^-1 sinh(Delta phi / 2)``, safe at ``Delta = 0``."""
    x = delta * phi / 2
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    sinhc = np.where(small, 1 + x**2 / 6, np.sinh(safe) / safe)
    return np.cosh(x), sinhc * phi / 2


def assemble(rho, phi, delta, J, t) -> np.ndarray:
    """``rho (cosh(Delta phi / 2) I + Delta^-1 sinh(Delta phi / 2) J)`` nodewise, shape (2, 2, n)."""
    ch, sh = _cosh_sinhc(delta, phi)
    out = (rho * sh) * J.evaluate(t)
    out[0, 0] += rho * ch
    out[1, 1] += rho * ch
    return out


@dataclass(frozen=True, eq=False)
class DKParameters:
    """``r`` and ``theta`` of a Daniele-Khrapkov matrix, with the ``Delta`` branch used."""

    r: GridFunction
    theta: GridFunction
    J: Union[EntireMatrixJ, RationalJ]
    delta: np.ndarray

    def assemble(self) -> np.ndarray:
        return assemble(self.r.values, self.theta.values, self.delta, self.J, self.r.grid.nodes)


def _winding(values, limit, grid) -> int:
    return winding_index(GridFunction(grid, values, limit))


def dk_parameters(K: DKMatrix, require_zero_index: bool = False) -> DKParameters:
    """Continuous ``r = sqrt(1 - Delta^2 f^2)`` and ``theta = Delta^-1 log((1 + Delta f)/(1 - Delta f))``.

    ``theta`` needs ``(1 + Delta f)/(1 - Delta f)`` to have zero winding. The
    square root only needs an even winding of ``1 - Delta^2 f^2``; with
    ``require_zero_index`` that winding must vanish. The sign of ``r`` is the
    one for which the assembled matrix reproduces ``K``.

    Raises
    ------
    WindingObstruction
        If a winding hypothesis fails.
    """
    grid = K.grid
    delta = K.delta()
    u = delta * K.f.values
    u_inf = K.delta_f_limit()
    a, b = 1 + u, 1 - u
    a_inf, b_inf = 1 + u_inf, 1 - u_inf
    try:
        ind_a = _winding(a, a_inf, grid)
        ind_b = _winding(b, b_inf, grid)
    except ZeroOnLine as exc:
        raise ZeroOnLine(f"1 +- Delta f vanishes on the line: {exc}") from exc
    if ind_a != ind_b:
        raise WindingObstruction(
            f"(1 + Delta f)/(1 - Delta f) has winding {ind_a - ind_b}; theta is not single valued")
    if require_zero_index and ind_a + ind_b != 0:
        raise WindingObstruction(f"1 - Delta^2 f^2 has winding {ind_a + ind_b}, not zero")
    r_inf = np.sqrt(a_inf * b_inf)
    r = continuous_sqrt(a * b, r_inf)
    log_q = continuous_log(a / b, a_inf / b_inf)
    # theta -> 2 f where Delta vanishes
    nonzero = delta != 0
    theta = np.where(nonzero, log_q / np.where(nonzero, delta, 1), 2 * K.f.values)
    if K.J.delta_sq_degree <= 0:
        theta_inf = np.log(a_inf / b_inf) / delta[0]
    else:
        # theta is even in Delta and decays where Delta grows
        theta_inf = 0j
    # r cosh(Delta theta / 2) is identically +1 or -1 depending on the branches
    ch, _ = _cosh_sinhc(delta, theta)
    if np.real(np.mean(r * ch)) < 0:
        r, r_inf = -r, -r_inf
    return DKParameters(GridFunction(grid, r, r_inf), GridFunction(grid, theta, theta_inf), K.J, delta)


def dk_commutative_product(p1: DKParameters, p2: DKParameters) -> DKParameters:
    """Parameters of the product of two assembled matrices sharing ``J``: ``(r1 r2, theta1 + theta2)``."""
    if not p1.J.same_as(p2.J) or not np.allclose(p1.delta, p2.delta):
        raise MismatchedJ("parameter sets belong to different J")
    return DKParameters(p1.r * p2.r, p1.theta + p2.theta, p1.J, p1.delta)


@dataclass(frozen=True, eq=False)
class MatrixFactorization:
    """``K = plus * diag(m^k1, m^k2) * minus`` sampled on a grid, ``m = (t - i)/(t + i)``.

    ``plus`` and ``minus`` have shape (2, 2, n). ``growth`` is the polynomial
    order the factor entries may grow with at infinity.
    """

    grid: Grid
    plus: np.ndarray
    minus: np.ndarray
    partial_indices: Tuple[int, int]
    residual: float
    meromorphic_poles: Tuple[complex, ...] = ()
    growth: int = 0

    def middle(self) -> np.ndarray:
        m = self.grid.circle
        out = np.zeros((2, 2, self.grid.n), dtype=complex)
        out[0, 0] = m ** self.partial_indices[0]
        out[1, 1] = m ** self.partial_indices[1]
        return out

    def reconstruct(self) -> np.ndarray:
        return matmul(matmul(self.plus, self.middle()), self.minus)

    def entry(self, side: str, i: int, j: int) -> GridFunction:
        vals = (self.plus if side == "plus" else self.minus)[i, j]
        lim = limit_from_samples(vals, self.grid) if self.growth == 0 else 0j
        return GridFunction(self.grid, vals, lim)

    def determinant(self, side: str) -> np.ndarray:
        a = self.plus if side == "plus" else self.minus
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]

    def analyticity_defects(self) -> dict:
        """Relative spectral defect of every entry on its forbidden side."""
        out = {}
        for side, arr in (("plus", self.plus), ("minus", self.minus)):
            for i in range(2):
                for j in range(2):
                    out[f"{side}_a{i + 1}{j + 1}"] = analyticity_defect(arr[i, j], self.grid, side, self.growth)
        return out

    def max_analyticity_defect(self) -> float:
        return max(self.analyticity_defects().values())

    def to_dict(self) -> dict:
        def block(side):
            return {f"a{i + 1}{j + 1}": self.entry(side, i, j).to_dict() for i in range(2) for j in range(2)}
        return {"indices": list(self.partial_indices), "residual": self.residual,
                "plus": block("plus"), "minus": block("minus"),
                "poles": [[float(p.real), float(p.imag)] for p in self.meromorphic_poles]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Nodewise product of (2, 2, n) arrays."""
    return np.einsum("ikn,kjn->ijn", a, b)


def _split_theta(theta: GridFunction, tol: float):
    grid = theta.grid
    dec = theta.values - theta.limit
    scale = max(1.0, _l2(dec, grid))
    defect = resolution_defect(dec, grid)
    if defect > tol * scale:
        raise ConvergenceFailure(f"theta is under-resolved (tail mass {defect:.2e})")
    tp, tm = hardy_split_values(dec, grid)
    return tp + theta.limit, tm


def dk_factorize(K: DKMatrix, tol: float = DEFAULT_TOL) -> MatrixFactorization:
    """Function-theoretic factorisation ``K = K_plus * m^kappa * K_minus``.

    ``r`` is factorised multiplicatively (its index ``kappa`` becomes both
    partial indices), ``theta`` is split additively with its limit given to
    the plus side, and each factor is assembled in the commutative class.
    Poles of a rational ``J`` are reported in ``meromorphic_poles``.
    """
    diag = validate_dk(K)
    if not (diag.trace_zero and diag.square_scalar):
        raise PreconditionViolated("; ".join(diag.messages))
    if diag.delta_sq_degree is not None and diag.delta_sq_degree > 2:
        raise GrowthUnsafe(f"deg Delta^2 = {diag.delta_sq_degree} > 2")
    if not diag.det_nonvanishing:
        raise ZeroOnLine("; ".join(diag.messages))
    params = dk_parameters(K)
    grid = K.grid
    t = grid.nodes
    sf = factorize_scalar(params.r, tol)
    th_p, th_m = _split_theta(params.theta, tol)
    plus = assemble(sf.plus.values, th_p, params.delta, K.J, t)
    minus = assemble(sf.minus.values, th_m, params.delta, K.J, t)
    kappa = sf.index
    # J enters the factors only through theta; for f = 0 they are the identity
    poles = tuple(K.J.poles()) if isinstance(K.J, RationalJ) and np.any(K.f.values != 0) else ()
    fac = MatrixFactorization(grid, plus, minus, (kappa, kappa), 0.0, poles, K.J.growth())
    residual = float(np.max(np.abs(fac.reconstruct() - K.values())))
    return MatrixFactorization(grid, plus, minus, (kappa, kappa), residual, poles, K.J.growth())


def dk_partial_indices(K: DKMatrix) -> Tuple[int, int]:
    """Partial indices of ``I + f [[0, b], [c, 0]]`` with constant ``b, c``.

    Conjugating by the eigenvectors of ``J`` diagonalises ``K`` into
    ``diag(1 + Delta f, 1 - Delta f)``, so the partial indices are the winding
    numbers of these two scalars, returned in decreasing order.
    """
    if not isinstance(K.J, EntireMatrixJ):
        raise UnsupportedJ("partial indices need a constant anti-diagonal J")
    bc = K.J.constant_antidiagonal()
    if bc is None or bc[0] == 0 or bc[1] == 0:
        raise UnsupportedJ("partial indices need a constant anti-diagonal J with nonzero entries")
    delta = np.sqrt(bc[0] * bc[1])
    u = delta * K.f.values
    u_inf = delta * K.f.limit
    grid = K.grid
    k1 = _winding(1 + u, 1 + u_inf, grid)
    k2 = _winding(1 - u, 1 - u_inf, grid)
    return tuple(sorted((k1, k2), reverse=True))


@dataclass(frozen=True, eq=False)
class RationalDKSplit:
    """Closed-form factor parameters of ``I + f_N J`` for a rational ``f_N``."""

    r_plus: np.ndarray
    r_minus: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    kappa: int
    delta: complex


def rational_dk_split(f: RationalFunction, J: EntireMatrixJ, t) -> RationalDKSplit:
    """Factor parameters of ``I + f J`` in closed form, without any Cauchy integral.

    ``1 +- Delta f`` are rational, so each splits exactly by pole/zero location;
    ``r_pm`` and ``Delta theta_pm`` follow from matched-pair square roots and
    logarithms of those factors. Needs constant ``J``.
    """
    if not isinstance(J, EntireMatrixJ) or not J.is_constant:
        raise UnsupportedJ("closed-form rational factorisation needs a constant J")
    delta = complex(np.sqrt(complex(J.delta_sq.coef[0])))
    g = f.limit

    def one_plus(s):
        zeros = f.solve(-1 / (s * delta))
        return RationalFunction(zeros, f.poles, 1 + s * delta * g)

    A, B = one_plus(1), one_plus(-1)
    a_p, a_m, ka = rational_split(A)
    b_p, b_m, kb = rational_split(B)
    if ka != kb:
        raise WindingObstruction(f"1 + Delta f and 1 - Delta f have different indices {ka}, {kb}")
    t = np.asarray(t, dtype=float)
    r_p = pair_sqrt(a_p * b_p, t)
    r_m = pair_sqrt(a_m * b_m, t)
    q_p = a_p / b_p
    q_m = a_m / b_m
    # the constant is Log(g_A / g_B), matching the anchoring of the sampled logarithm
    lt_p = pair_log(RationalFunction(q_p.zeros, q_p.poles, 1.0, strict=False), t) + np.log(q_p.gain)
    lt_m = pair_log(RationalFunction(q_m.zeros, q_m.poles, 1.0, strict=False), t)
    th_p, th_m = lt_p / delta, lt_m / delta
    # fix the sign of r_plus so that the factors reproduce I + f J
    ch, _ = _cosh_sinhc(delta, th_p + th_m)
    m = (t - 1j) / (t + 1j)
    if np.real(np.mean(r_p * r_m * m**ka * ch)) < 0:
        r_p = -r_p
    return RationalDKSplit(r_p, r_m, th_p, th_m, ka, delta)


def rational_dk_factorize(f: RationalFunction, J: EntireMatrixJ, grid: Grid) -> MatrixFactorization:
    """Factorisation of ``I + f J`` for rational ``f`` and constant ``J``, sampled on ``grid``."""
    t = grid.nodes
    s = rational_dk_split(f, J, t)
    delta = np.full(t.size, s.delta)
    plus = assemble(s.r_plus, s.theta_plus, delta, J, t)
    minus = assemble(s.r_minus, s.theta_minus, delta, J, t)
    target = DKMatrix(GridFunction(grid, f(t), f.limit), J).values()
    fac = MatrixFactorization(grid, plus, minus, (s.kappa, s.kappa), 0.0)
    residual = float(np.max(np.abs(fac.reconstruct() - target)))
    return MatrixFactorization(grid, plus, minus, (s.kappa, s.kappa), residual)
