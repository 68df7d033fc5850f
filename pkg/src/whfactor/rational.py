"""Rational functions in zero/pole/gain form, their half-plane splitting, and AAA fitting.

Fitting works on the unit circle: the target is sampled at the circle images
``z = (t - i)/(t + i)`` of a Moebius grid together with ``z = 1`` (infinity),
approximated there by the AAA algorithm, and the resulting zeros and poles are
mapped back to the real line with ``t = i (1 + z)/(1 - z)``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .errors import (DegreeMismatch, MaxDegreeReached, PoleEvaluation,
                     RealAxisSingularity, SpuriousRealPole)
from .realline import GridFunction, moebius_grid

REAL_AXIS_FLOOR = 1e-6
# zero/pole pairs closer than this (relative) are treated as cancelling
CANCEL_TOL = 1e-9
DEFAULT_FIT_POINTS = 1024
VALIDATION_FACTOR = 4
JITTER = 1e-8


def _as_roots(a) -> np.ndarray:
    return np.atleast_1d(np.asarray(a, dtype=complex)).ravel()


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """``gain * prod(t - zeros) / prod(t - poles)``.

    With ``strict=True`` (the default) no zero or pole may lie within
    ``REAL_AXIS_FLOOR`` of the real axis.
    """

    zeros: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    gain: complex = 1.0
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        z = _as_roots(self.zeros)
        p = _as_roots(self.poles)
        if self.strict:
            close = np.concatenate([z, p])
            close = close[np.abs(close.imag) < REAL_AXIS_FLOOR]
            if close.size:
                raise RealAxisSingularity(f"zero or pole at {close[0]:.6g} is on the real axis")
        if not np.all(np.isfinite(z)) or not np.all(np.isfinite(p)):
            raise ValueError("zeros and poles must be finite")
        z.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "zeros", z)
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "gain", complex(self.gain))

    @classmethod
    def constant(cls, c: complex) -> "RationalFunction":
        return cls([], [], c)

    @classmethod
    def from_coefficients(cls, num: Sequence, den: Sequence = (1,), strict: bool = True) -> "RationalFunction":
        """Build from polynomial coefficients, highest power first."""
        num = np.trim_zeros(np.asarray(num, dtype=complex), "f")
        den = np.trim_zeros(np.asarray(den, dtype=complex), "f")
        if den.size == 0:
            raise ZeroDivisionError("zero denominator")
        if num.size == 0:
            return cls([], [], 0.0, strict)
        return cls(np.roots(num), np.roots(den), num[0] / den[0], strict)

    @property
    def degree(self) -> Tuple[int, int]:
        return self.zeros.size, self.poles.size

    @property
    def limit(self) -> complex:
        """Value at infinity (needs equal degrees)."""
        nz, npl = self.degree
        if nz > npl:
            raise DegreeMismatch("numerator degree exceeds denominator degree")
        return self.gain if nz == npl else 0j

    def __call__(self, t):
        return evaluate(self, t)

    def numerator(self) -> np.ndarray:
        return self.gain * np.poly(self.zeros) if self.zeros.size else np.array([self.gain])

    def denominator(self) -> np.ndarray:
        return np.poly(self.poles) if self.poles.size else np.array([1.0 + 0j])

    def _with(self, zeros, poles, gain) -> "RationalFunction":
        return RationalFunction(zeros, poles, gain, self.strict).cancel()

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            out = RationalFunction(np.concatenate([self.zeros, other.zeros]),
                                   np.concatenate([self.poles, other.poles]),
                                   self.gain * other.gain, self.strict and other.strict)
            return out.cancel()
        return self._with(self.zeros, self.poles, self.gain * complex(other))

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction":
        if self.gain == 0:
            raise ZeroDivisionError("inverse of the zero function")
        return RationalFunction(self.poles, self.zeros, 1 / self.gain, self.strict)

    def __truediv__(self, other):
        if isinstance(other, RationalFunction):
            return self * other.inverse()
        return self * (1 / complex(other))

    def __rtruediv__(self, other):
        return self.inverse() * complex(other)

    def __pow__(self, k: int):
        k = int(k)
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        return RationalFunction(np.tile(base.zeros, k), np.tile(base.poles, k), base.gain**k, self.strict)

    def __neg__(self):
        return RationalFunction(self.zeros, self.poles, -self.gain, self.strict)

    def __add__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(other)
        if self.gain == 0:
            return other
        if other.gain == 0:
            return self
        num = np.polyadd(np.polymul(self.numerator(), other.denominator()),
                         np.polymul(other.numerator(), self.denominator()))
        # the poles of the sum are known exactly; deflate the numerator at each
        # one it vanishes at instead of re-rooting the denominator
        poles = []
        for p in np.concatenate([self.poles, other.poles]):
            scale = np.sum(np.abs(num) * np.abs(p) ** np.arange(num.size - 1, -1, -1))
            if num.size > 1 and abs(np.polyval(num, p)) <= 1e-11 * scale:
                num = np.polydiv(num, np.array([1.0, -p]))[0]
            else:
                poles.append(p)
        num = np.trim_zeros(num, "f")
        strict = self.strict and other.strict
        if num.size == 0 or np.all(np.abs(num) == 0):
            return RationalFunction([], [], 0.0, strict)
        return RationalFunction(np.roots(num), poles, num[0], strict).cancel()

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, RationalFunction) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def cancel(self, tol: float = CANCEL_TOL) -> "RationalFunction":
        """Remove zero/pole pairs that coincide to relative tolerance ``tol``."""
        zeros = list(self.zeros)
        poles = list(self.poles)
        kept = []
        for z in zeros:
            if poles:
                d = np.abs(np.asarray(poles) - z)
                j = int(np.argmin(d))
                if d[j] <= tol * max(1.0, abs(z)):
                    poles.pop(j)
                    continue
            kept.append(z)
        if len(kept) == len(zeros):
            return self
        return RationalFunction(kept, poles, self.gain, self.strict)

    def residues(self) -> np.ndarray:
        """Residues at simple poles (numerator degree must not exceed denominator)."""
        p = self.poles
        out = np.empty(p.size, dtype=complex)
        for k, pk in enumerate(p):
            others = np.delete(p, k)
            out[k] = self.gain * np.prod(pk - self.zeros) / np.prod(pk - others)
        return out

    def solve(self, w: complex) -> np.ndarray:
        """All finite ``t`` with ``R(t) = w`` (roots of ``N - w D``)."""
        w = complex(w)
        nz, npl = self.degree
        p = self.poles
        simple = npl > 0 and nz <= npl and (
            npl == 1 or np.min(np.abs(p[:, None] - p[None, :]) + np.eye(npl)) > 1e-6 * max(1.0, np.max(np.abs(p))))
        if simple:
            # arrowhead pencil of gain - w + sum res_k / (t - p_k)
            res = self.residues()
            E = np.zeros((npl + 1, npl + 1), dtype=complex)
            E[0, 0] = self.limit - w
            E[0, 1:] = res
            E[1:, 0] = 1
            E[1:, 1:] = np.diag(p)
            B = np.eye(npl + 1)
            B[0, 0] = 0
            ev = scipy.linalg.eigvals(E, B)
            return ev[np.isfinite(ev)]
        coeffs = np.polysub(self.numerator(), w * self.denominator())
        coeffs = np.trim_zeros(coeffs, "f")
        return np.roots(coeffs) if coeffs.size > 1 else np.zeros(0, complex)

    def sqrt(self) -> "RationalFunction":
        """Square root when every zero and pole has even multiplicity.

        The gain takes the principal root. Raises ValueError otherwise.
        """
        half = []
        for roots in (self.zeros, self.poles):
            rest = list(roots)
            out = []
            while rest:
                a = rest.pop(0)
                d = np.abs(np.asarray(rest) - a) if rest else np.array([])
                if d.size == 0 or np.min(d) > 1e-8 * max(1.0, abs(a)):
                    raise ValueError("not a perfect square")
                rest.pop(int(np.argmin(d)))
                out.append(a)
            half.append(out)
        return RationalFunction(half[0], half[1], np.sqrt(self.gain), self.strict)

    def is_perfect_square(self) -> bool:
        try:
            self.sqrt()
        except ValueError:
            return False
        return True

    def to_dict(self) -> dict:
        return {"gain": [self.gain.real, self.gain.imag],
                "zeros": [[float(z.real), float(z.imag)] for z in self.zeros],
                "poles": [[float(p.real), float(p.imag)] for p in self.poles]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, strict: bool = True) -> "RationalFunction":
        return cls([complex(*z) for z in d.get("zeros", [])],
                   [complex(*p) for p in d.get("poles", [])],
                   complex(*d.get("gain", [1.0, 0.0])), strict)

    @classmethod
    def from_json(cls, s: str) -> "RationalFunction":
        return cls.from_dict(json.loads(s))


def evaluate(R: RationalFunction, t):
    """``gain * prod(t - z_i) / prod(t - p_j)`` at scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=complex)
    flat = t_arr.reshape(-1)
    if R.poles.size:
        hit = np.abs(flat[:, None] - R.poles[None, :]) <= 1e-14 * np.maximum(1.0, np.abs(R.poles))
        if np.any(hit):
            raise PoleEvaluation(f"evaluation at the pole {R.poles[np.argmax(hit.any(axis=0))]}")
    num = np.prod(flat[:, None] - R.zeros[None, :], axis=1)
    den = np.prod(flat[:, None] - R.poles[None, :], axis=1)
    out = (R.gain * num / den).reshape(t_arr.shape)
    return out[()] if out.ndim == 0 else out


def rational_split(R: RationalFunction):
    """Exact factorisation ``R = R_plus * m^kappa * R_minus``, ``m = (t - i)/(t + i)``.

    ``R_plus`` keeps the zeros and poles of the lower half-plane (so it is
    analytic and nonvanishing above the line), ``R_minus`` those of the upper
    half-plane, and ``kappa = #zeros above - #poles above``. The normalisation
    is ``R_minus -> 1``, ``R_plus -> gain``.
    """
    nz, npl = R.degree
    if nz != npl:
        raise DegreeMismatch(f"numerator degree {nz} != denominator degree {npl}")
    if R.gain == 0:
        raise DegreeMismatch("zero function has no factorisation")
    z_low = R.zeros[R.zeros.imag < 0]
    z_up = R.zeros[R.zeros.imag > 0]
    p_low = R.poles[R.poles.imag < 0]
    p_up = R.poles[R.poles.imag > 0]
    kappa = int(p_low.size - z_low.size)
    plus_z, plus_p = list(z_low), list(p_low)
    minus_z, minus_p = list(z_up), list(p_up)
    # (t + i)^kappa goes to the plus factor, (t - i)^(-kappa) to the minus one
    if kappa > 0:
        plus_z += [-1j] * kappa
        minus_p += [1j] * kappa
    elif kappa < 0:
        plus_p += [-1j] * (-kappa)
        minus_z += [1j] * (-kappa)
    plus = RationalFunction(plus_z, plus_p, R.gain).cancel()
    minus = RationalFunction(minus_z, minus_p, 1.0).cancel()
    return plus, minus, kappa


def pair_sqrt(R: RationalFunction, t) -> np.ndarray:
    """``sqrt(gain) * prod sqrt(t - z_k) / sqrt(t - p_k)`` with principal roots.

    Each factor has its cut on a horizontal ray away from the line, so the
    product is continuous on the real axis. Needs equal degrees.
    """
    if R.zeros.size != R.poles.size:
        raise DegreeMismatch("matched-pair square root needs equal degrees")
    t = np.asarray(t, dtype=complex)
    out = np.full(t.shape, np.sqrt(R.gain), dtype=complex)
    for z, p in zip(R.zeros, R.poles):
        out = out * np.sqrt(t - z) / np.sqrt(t - p)
    return out


def pair_log(R: RationalFunction, t) -> np.ndarray:
    """``Log(gain) + sum Log(t - z_k) - sum Log(t - p_k)`` with principal branches."""
    t = np.asarray(t, dtype=complex)
    out = np.full(t.shape, np.log(R.gain), dtype=complex)
    for z in R.zeros:
        out = out + np.log(t - z)
    for p in R.poles:
        out = out - np.log(t - p)
    return out


@dataclass(frozen=True)
class RationalApproximation:
    approximant: RationalFunction
    degree: Tuple[int, int]
    max_error: float
    converged: bool = True

    def to_dict(self) -> dict:
        return {"degree": list(self.degree), "max_error": self.max_error,
                "converged": self.converged, "approximant": self.approximant.to_dict()}


def _aaa_weights(z_sup, f_sup, z, f):
    """Weights minimising the linearised residual over the non-support points."""
    C = 1.0 / (z[:, None] - z_sup[None, :])
    A = f[:, None] * C - C * f_sup[None, :]
    _, _, vh = np.linalg.svd(A, full_matrices=False)
    return vh[-1].conj()


def _bary_roots(z_sup, vals) -> np.ndarray:
    """Finite roots of ``sum vals_k / (z - z_k)`` by a generalised eigenproblem."""
    m = z_sup.size
    E = np.zeros((m + 1, m + 1), dtype=complex)
    E[0, 1:] = vals
    E[1:, 0] = 1
    E[1:, 1:] = np.diag(z_sup)
    B = np.eye(m + 1)
    B[0, 0] = 0
    ev = scipy.linalg.eigvals(E, B)
    return ev[np.isfinite(ev)]


def _aaa(z, f, z_inf, f_inf, degree):
    """Greedy AAA on points ``z`` with ``z_inf`` forced as first support point.

    Yields ``(d, support, values, weights)`` for d = 0..degree.
    """
    mask = np.ones(z.size, dtype=bool)
    z_sup = np.array([z_inf])
    f_sup = np.array([f_inf])
    w = np.array([1.0 + 0j])
    yield 0, z_sup, f_sup, w
    r = np.full(z.size, f_inf)
    for d in range(1, degree + 1):
        err = np.where(mask, np.abs(f - r), -1.0)
        j = int(np.argmax(err))
        mask[j] = False
        z_sup = np.append(z_sup, z[j])
        f_sup = np.append(f_sup, f[j])
        w = _aaa_weights(z_sup, f_sup, z[mask], f[mask])
        C = 1.0 / (z[mask][:, None] - z_sup[None, :])
        r = f.copy()
        r[mask] = (C @ (w * f_sup)) / (C @ w)
        yield d, z_sup, f_sup, w


def _to_line(zeta: np.ndarray) -> np.ndarray:
    # circle roots at z = 1 correspond to t = infinity and are dropped
    zeta = zeta[np.abs(1 - zeta) > 1e-12]
    return 1j * (1 + zeta) / (1 - zeta)


def _convert(z_sup, f_sup, w, t_fit, f_fit, limit: complex) -> RationalFunction:
    poles = _to_line(_bary_roots(z_sup, w))
    zeros = _to_line(_bary_roots(z_sup, w * f_sup))
    if zeros.size == poles.size and limit != 0:
        # the barycentric form interpolates the limit at z = 1; keep it exact
        return RationalFunction(zeros, poles, limit, strict=False)
    shape = RationalFunction(zeros, poles, 1.0, strict=False)
    q = shape(t_fit)
    gain = np.vdot(q, f_fit) / np.vdot(q, q)
    return RationalFunction(zeros, poles, gain, strict=False)


def _has_real_pole(R: RationalFunction) -> bool:
    return bool(np.any(np.abs(R.poles.imag) < REAL_AXIS_FLOOR)
                or np.any(np.abs(R.zeros.imag) < REAL_AXIS_FLOOR))


def _parse_degree(degree) -> int:
    if isinstance(degree, (tuple, list)):
        p, q = degree
        if p != q:
            raise DegreeMismatch("only equal numerator and denominator degrees are supported")
        degree = p
    degree = int(degree)
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    return degree


def fit_rational(target: GridFunction, degree: Union[int, Tuple[int, int]] = 16,
                 tol: float = 1e-10, n_fit: int = DEFAULT_FIT_POINTS,
                 fixed_degree: bool = False) -> RationalApproximation:
    """Rational approximation of a bounded function on the real line.

    ``degree`` is the cap on the type ``[d, d]``; the smallest degree whose
    validated error is below ``tol`` is returned. With ``fixed_degree`` the
    fit is done at exactly ``degree``. The validation grid has four times as
    many points as the fitting grid; the fitting grid is taken from the
    target's source callable when available, otherwise every fourth node of the
    target grid is used for fitting and all of them for validation.

    Warns with MaxDegreeReached (and sets ``converged=False``) if the cap is
    reached without meeting ``tol``.
    """
    degree = _parse_degree(degree)
    limit = target.limit
    if target.source is not None:
        fit_grid = moebius_grid(n_fit)
        val_grid = moebius_grid(VALIDATION_FACTOR * n_fit)
        t_fit, f_fit = fit_grid.nodes, np.asarray(target.source(fit_grid.nodes), complex) * np.ones(n_fit)
        t_val = val_grid.nodes
        f_val = np.asarray(target.source(t_val), complex) * np.ones(t_val.size)
    else:
        t_val, f_val = target.grid.nodes, target.values
        t_fit, f_fit = t_val[::VALIDATION_FACTOR], f_val[::VALIDATION_FACTOR]

    def run(t_pts, f_pts):
        z_pts = (t_pts - 1j) / (t_pts + 1j)
        best = None
        for d, z_sup, f_sup, w in _aaa(z_pts, f_pts, 1.0 + 0j, limit, degree):
            if fixed_degree and d < degree:
                continue
            R = _convert(z_sup, f_sup, w, t_pts, f_pts, limit)
            if _has_real_pole(R):
                continue
            err = float(np.max(np.abs(R(t_val) - f_val)))
            cand = RationalApproximation(RationalFunction(R.zeros, R.poles, R.gain), (d, d), err)
            if err <= tol:
                return cand, True
            if best is None or err < best.max_error:
                best = cand
        return best, False

    result, ok = run(t_fit, f_fit)
    if result is None:
        # retry with jittered supports
        rng = np.random.default_rng(0)
        t_jit = t_fit * (1 + JITTER * rng.standard_normal(t_fit.size))
        f_jit = f_fit if target.source is None else np.asarray(target.source(t_jit), complex) * np.ones(t_jit.size)
        result, ok = run(t_jit, f_jit)
        if result is None:
            raise SpuriousRealPole("every candidate approximant has a pole or zero on the real line")
    if not ok:
        warnings.warn(f"degree cap {degree} reached with max error {result.max_error:.3e}",
                      MaxDegreeReached, stacklevel=2)
        result = RationalApproximation(result.approximant, result.degree, result.max_error, False)
    return result
