"""Perturbation bounds for Daniele-Khrapkov factors, the unstable diagonal example,
and the Abrahams reduction with meromorphic factorisation and pole removal."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .dk import (DKMatrix, MatrixFactorization, RationalJ, _split_theta,
                 assemble, dk_factorize, dk_parameters, matmul)
from .errors import (BranchError, DegreeMismatch, FactorizationError,
                     MismatchedJ, PreconditionViolated, ZeroEpsilon)
from .rational import RationalFunction, fit_rational, pair_sqrt
from .realline import (DEFAULT_TOL, MOEBIUS, Grid, GridFunction, _l2,
                       analyticity_defect, l2_norm, limit_from_samples, moebius_grid)
from .scalar import (ScalarBoundReport, additive_bound_check, factorize_scalar,
                     multiplicative_bound_check, winding_index)

SLACK_FACTOR = 10.0
SLOPE_TOL = 0.15
EPS_RANGE = (1e-6, 1e-3)


# --------------------------------------------------------------------------
# bound reports

@dataclass
class DKBoundReport:
    """Constants, guaranteed bounds and measured distances for a pair of DK symbols.

    The ``*_pm`` measurements are the larger of the plus and minus distances
    and are ``None`` on grids without a Hardy splitting.
    """

    epsilon: float
    m: float
    M: float
    N: float
    c: float
    d: float
    L: float
    r_bound: float
    theta_bound: float
    r_factor_bound: float
    theta_split_bound: float
    measured_r: float
    measured_theta: float
    measured_r_pm: Optional[float] = None
    measured_theta_pm: Optional[float] = None
    factor_error: Optional[float] = None
    slack_r: float = 0.0
    slack_theta: float = 0.0
    slack_r_pm: float = 0.0
    slack_theta_pm: float = 0.0

    def checks(self) -> dict:
        out = {"r": self.measured_r <= self.r_bound + self.slack_r,
               "theta": self.measured_theta <= self.theta_bound + self.slack_theta}
        if self.measured_r_pm is not None:
            out["r_pm"] = self.measured_r_pm <= self.r_factor_bound + self.slack_r_pm
            out["theta_pm"] = self.measured_theta_pm <= self.theta_split_bound + self.slack_theta_pm
        return out

    @property
    def lemma_pass(self) -> bool:
        """Both the r and the theta inequality hold."""
        c = self.checks()
        return c["r"] and c["theta"]

    @property
    def passed(self) -> bool:
        return all(self.checks().values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _splits(K: DKMatrix):
    """Parameters, factor parameters and assembled factors of a zero-index DK matrix."""
    params = dk_parameters(K, require_zero_index=True)
    sf = factorize_scalar(params.r)
    th_p, th_m = _split_theta(params.theta, DEFAULT_TOL)
    return params, sf, th_p, th_m


def _measure(K: DKMatrix, Kt: DKMatrix) -> dict:
    grid = K.grid
    delta = K.delta()
    u, ut = delta * K.f.values, delta * Kt.f.values
    if abs(K.delta_f_limit() - Kt.delta_f_limit()) > 1e-14 * max(1.0, abs(K.delta_f_limit())) \
            and grid.map_kind == MOEBIUS:
        raise PreconditionViolated("symbols differ at infinity; their L2 distance is infinite")
    eps = _l2(u - ut, grid)
    hardy = grid.map_kind == MOEBIUS
    if hardy:
        p, sf, th_p, th_m = _splits(K)
        pt, sft, tht_p, tht_m = _splits(Kt)
    else:
        p = dk_parameters(K, require_zero_index=True)
        pt = dk_parameters(Kt, require_zero_index=True)
    r, rt = p.r.values, pt.r.values
    out = {
        "epsilon": eps,
        "m": float(min(np.min(np.abs(r)), np.min(np.abs(rt)))),
        "M": float(max(np.max(np.abs(r)), np.max(np.abs(rt)))),
        "N": float(max(np.max(np.abs(u)), np.max(np.abs(ut)))),
        "c": float(np.min(np.abs(delta))),
        "d": float(min(np.min(np.abs(1 + u)), np.min(np.abs(1 + ut)))),
        "L": float(max(np.max(np.abs((1 - u) / (1 + u))), np.max(np.abs((1 - ut) / (1 + ut))))),
        "measured_r": _l2(r - rt, grid),
        "measured_theta": _l2(p.theta.values - pt.theta.values, grid),
    }
    if hardy:
        out["measured_r_pm"] = max(_l2(sf.plus.values - sft.plus.values, grid),
                                   _l2(sf.minus.values - sft.minus.values, grid))
        out["measured_theta_pm"] = max(_l2(th_p - tht_p, grid), _l2(th_m - tht_m, grid))
        t = grid.nodes
        errs = []
        for rr, rrt, a, at in ((sf.plus.values, sft.plus.values, th_p, tht_p),
                               (sf.minus.values, sft.minus.values, th_m, tht_m)):
            F = assemble(rr, a, delta, K.J, t)
            Ft = assemble(rrt, at, delta, K.J, t)
            errs.extend(_l2(F[i, j] - Ft[i, j], grid) for i in range(2) for j in range(2))
        out["factor_error"] = max(errs)
    return out


def lemma_bounds(K: DKMatrix, K_tilde: DKMatrix, with_slack: bool = False) -> DKBoundReport:
    """Compute the r and theta perturbation bounds for two DK symbols sharing ``J``.

    Constants are read off the samples of both symbols. With ``with_slack`` the
    measurements are repeated on the half-size grid (both ``f`` need source
    callables) and each slack is ten times the change.

    Raises
    ------
    MismatchedJ
        If the symbols do not share ``J``.
    WindingObstruction
        If ``1 - Delta^2 f^2`` or ``(1 + Delta f)/(1 - Delta f)`` winds.
    """
    if K.J is not K_tilde.J and not K.J.same_as(K_tilde.J):
        raise MismatchedJ("lemma bounds need a shared J")
    q = _measure(K, K_tilde)
    eps, m, M, N, c, d, L = (q[k] for k in ("epsilon", "m", "M", "N", "c", "d", "L"))
    theta_bound = 2 * eps / (c * d**2 * L) if c > 0 else math.inf
    rep = DKBoundReport(
        epsilon=eps, m=m, M=M, N=N, c=c, d=d, L=L,
        r_bound=N * eps / m,
        theta_bound=theta_bound,
        r_factor_bound=5 * M * N * eps / m**2,
        theta_split_bound=theta_bound,
        measured_r=q["measured_r"],
        measured_theta=q["measured_theta"],
        measured_r_pm=q.get("measured_r_pm"),
        measured_theta_pm=q.get("measured_theta_pm"),
        factor_error=q.get("factor_error"),
    )
    if with_slack:
        coarse = K.grid.coarsened()
        qc = _measure(K.on_grid(coarse), K_tilde.on_grid(coarse))
        rep.slack_r = SLACK_FACTOR * abs(q["measured_r"] - qc["measured_r"])
        rep.slack_theta = SLACK_FACTOR * abs(q["measured_theta"] - qc["measured_theta"])
        if "measured_r_pm" in q:
            rep.slack_r_pm = SLACK_FACTOR * abs(q["measured_r_pm"] - qc["measured_r_pm"])
            rep.slack_theta_pm = SLACK_FACTOR * abs(q["measured_theta_pm"] - qc["measured_theta_pm"])
    return rep


# --------------------------------------------------------------------------
# perturbation experiments

def rational_bump(a: complex, z: complex):
    """Callable ``a / ((t - z)(t - conj(z)))``; real-valued shape, no real poles for Im z != 0."""
    def bump(t):
        return a / ((t - z) * (t - np.conj(z)))
    return bump


def random_bump(rng: np.random.Generator):
    """Bump with centre in [-3, 3] + i[0.5, 3] and a random unit-modulus amplitude."""
    z = complex(rng.uniform(-3, 3), rng.uniform(0.5, 3))
    a = np.exp(1j * rng.uniform(0, 2 * np.pi))
    return rational_bump(a, z)


def perturb(K: DKMatrix, bump, eps: float) -> DKMatrix:
    """``K`` with ``f`` replaced by ``f + s * bump``, ``s`` chosen so that ``||Delta (f - f~)||_2 = eps``."""
    grid = K.grid
    b = GridFunction.from_callable(bump, grid, 0)
    size = _l2(K.delta() * b.values, grid)
    return K.with_f(K.f + b * (eps / size))


@dataclass
class DrawResult:
    index: int
    target_epsilon: float
    report: Optional[DKBoundReport] = None
    skipped: bool = False
    error: Optional[str] = None


@dataclass
class SweepResult:
    draws: List[DrawResult]
    slope: float
    slope_ci: Tuple[float, float]

    @property
    def reports(self) -> List[DKBoundReport]:
        return [d.report for d in self.draws if d.report is not None and not d.skipped]

    @property
    def admissible(self) -> int:
        return len(self.reports)

    @property
    def passes(self) -> int:
        return sum(r.passed for r in self.reports)

    def summary(self) -> dict:
        return {"draws": len(self.draws), "admissible": self.admissible, "passes": self.passes,
                "slope": self.slope, "slope_ci": list(self.slope_ci)}

    def to_csv(self) -> str:
        cols = ["draw", "target_epsilon", "skipped", "error"] + list(DKBoundReport.__dataclass_fields__) + ["passed"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for d in self.draws:
            row = {"draw": d.index, "target_epsilon": repr(d.target_epsilon),
                   "skipped": int(d.skipped), "error": d.error or ""}
            if d.report is not None:
                for k, v in d.report.to_dict().items():
                    row[k] = "" if v is None else (int(v) if isinstance(v, bool) else repr(float(v)))
            w.writerow([row.get(c, "") for c in cols])
        return buf.getvalue()


def loglog_slope(eps, err, confidence: float = 0.95):
    """Least-squares slope of ``log err`` against ``log eps`` with a confidence interval."""
    eps = np.asarray(eps, float)
    err = np.asarray(err, float)
    keep = (eps > 0) & (err > 0)
    if keep.sum() < 3:
        return math.nan, (math.nan, math.nan)
    fit = stats.linregress(np.log(eps[keep]), np.log(err[keep]))
    h = stats.t.ppf(0.5 + confidence / 2, keep.sum() - 2) * fit.stderr
    return float(fit.slope), (float(fit.slope - h), float(fit.slope + h))


def perturbation_sweep(K: DKMatrix, count: int, seed: int = 0, eps_range=EPS_RANGE,
                       with_slack: bool = True) -> SweepResult:
    """Random rational-bump perturbations of ``f`` with ``log10 eps`` uniform in ``eps_range``.

    Draw ``i`` uses the generator seeded with ``(seed, i)``, so results do not
    depend on the order draws are evaluated in. Draws with ``eps >= m/2`` or
    ``eps >= d/2`` are skipped; failures are recorded per draw.
    """
    draws = []
    lo, hi = np.log10(eps_range[0]), np.log10(eps_range[1])
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        eps = float(10 ** rng.uniform(lo, hi))
        bump = random_bump(rng)
        dr = DrawResult(i, eps)
        try:
            Kt = perturb(K, bump, eps)
            rep = lemma_bounds(K, Kt, with_slack=with_slack)
            dr.report = rep
            if not (rep.epsilon < rep.m / 2 and rep.epsilon < rep.d / 2):
                dr.skipped = True
        except FactorizationError as exc:
            dr.error = f"{type(exc).__name__}: {exc}"
        draws.append(dr)
    good = [d.report for d in draws if d.report is not None and not d.skipped and d.report.factor_error]
    slope, ci = loglog_slope([r.epsilon for r in good], [r.factor_error for r in good])
    return SweepResult(draws, slope, ci)


@dataclass
class ScalarDraw:
    index: int
    report: "ScalarBoundReport"
    slack: float

    @property
    def passed(self) -> bool:
        return self.report.holds(self.slack)


def scalar_bound_sweep(F: GridFunction, kind: str, count: int, seed: int = 0,
                       eps_range=EPS_RANGE) -> List[ScalarDraw]:
    """Seeded rational-bump perturbations of a scalar ``F`` tested against the additive
    (``kind="additive"``, decaying ``F``) or multiplicative (zero-index ``F``) estimate.

    ``F`` needs a source callable; each slack is ten times the change in the
    measured distance between the grid and its half-size coarsening.
    """
    check = {"additive": additive_bound_check, "multiplicative": multiplicative_bound_check}[kind]
    grid, coarse = F.grid, F.grid.coarsened()
    lo, hi = np.log10(eps_range[0]), np.log10(eps_range[1])
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        eps = float(10 ** rng.uniform(lo, hi))
        b = GridFunction.from_callable(random_bump(rng), grid, 0)
        Ft = F + b * (eps / l2_norm(b))
        rep = check(F, Ft)
        rc = check(F.on_grid(coarse), Ft.on_grid(coarse))
        slack = SLACK_FACTOR * max(abs(rep.measured_plus - rc.measured_plus),
                                   abs(rep.measured_minus - rc.measured_minus))
        out.append(ScalarDraw(i, rep, slack))
    return out


@dataclass
class ScalingStudy:
    epsilon: np.ndarray
    factor_error: np.ndarray
    slope: float
    slope_ci: Tuple[float, float]

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon.tolist(), "factor_error": self.factor_error.tolist(),
                "slope": self.slope, "slope_ci": list(self.slope_ci)}


def epsilon_scaling(K: DKMatrix, halvings: int = 8, eps0: float = 1e-3, seed: int = 0) -> ScalingStudy:
    """Factor error along one perturbation direction as ``eps`` is halved repeatedly."""
    bump = random_bump(np.random.default_rng([seed, 0]))
    eps = eps0 / 2.0 ** np.arange(halvings + 1)
    err = np.array([lemma_bounds(K, perturb(K, bump, e)).factor_error for e in eps])
    slope, ci = loglog_slope(eps, err)
    return ScalingStudy(eps, err, slope, ci)


# --------------------------------------------------------------------------
# unstable diagonal example

def _closed_form(grid: Grid, plus, minus, indices, target) -> MatrixFactorization:
    fac = MatrixFactorization(grid, plus, minus, indices, 0.0, (), 1)
    residual = float(np.max(np.abs(fac.reconstruct() - target)))
    return MatrixFactorization(grid, plus, minus, indices, residual, (), 1)


def unstable_symbol(epsilon: float, grid: Grid) -> np.ndarray:
    """``[[m, 0], [eps, 1/m]]`` with ``m = (t - i)/(t + i)``."""
    m = grid.circle
    out = np.zeros((2, 2, grid.n), dtype=complex)
    out[0, 0] = m
    out[1, 1] = 1 / m
    out[1, 0] = epsilon
    return out


def unstable_base(grid: Grid) -> MatrixFactorization:
    """``diag(m, 1/m) = I diag(m, 1/m) I`` with partial indices (1, -1)."""
    eye = np.zeros((2, 2, grid.n), dtype=complex)
    eye[0, 0] = eye[1, 1] = 1
    return _closed_form(grid, eye, eye.copy(), (1, -1), unstable_symbol(0.0, grid))


def unstable_perturbed(epsilon: float, grid: Grid) -> MatrixFactorization:
    """``[[m, 0], [eps, 1/m]] = [[1, m], [0, eps]] I [[0, -1/eps], [1, 1/(eps m)]]``, indices (0, 0)."""
    if epsilon == 0:
        raise ZeroEpsilon("the perturbed factorisation needs epsilon != 0")
    m = grid.circle
    plus = np.zeros((2, 2, grid.n), dtype=complex)
    plus[0, 0] = 1
    plus[0, 1] = m
    plus[1, 1] = epsilon
    minus = np.zeros((2, 2, grid.n), dtype=complex)
    minus[0, 1] = -1 / epsilon
    minus[1, 0] = 1
    minus[1, 1] = 1 / (epsilon * m)
    return _closed_form(grid, plus, minus, (0, 0), unstable_symbol(epsilon, grid))


def unstable_example(epsilon: float, grid: Optional[Grid] = None):
    """Factorisations of the unperturbed and the ``eps``-perturbed diagonal symbol.

    For ``eps = 0`` both entries of the returned pair are the unperturbed
    factorisation.
    """
    grid = grid or moebius_grid()
    base = unstable_base(grid)
    if epsilon == 0:
        return base, base
    return base, unstable_perturbed(epsilon, grid)


# --------------------------------------------------------------------------
# Abrahams reduction and meromorphic factorisation

@dataclass(frozen=True, eq=False)
class AbrahamsReduction:
    symbol: DKMatrix
    r_N: RationalFunction
    fit_error: float
    exact: bool
    converged: bool = True


def _sqrt_ratio(p: RationalFunction, n: RationalFunction):
    """Exact rational root of ``p/n`` when it exists, else a matched-pair callable."""
    q = p / n
    if q.is_perfect_square():
        return q, q.sqrt()
    if q.zeros.size != q.poles.size:
        raise DegreeMismatch("(p/n)^(1/2) must be bounded on the line unless p/n is a perfect square")
    return q, None


def abrahams_reduce(n: RationalFunction, p: RationalFunction, f: GridFunction,
                    fit_degree=8, tol: float = 1e-10) -> AbrahamsReduction:
    """Rewrite ``I + f [[0, n], [p, 0]]`` as ``I + g J_N`` with ``J_N = [[0, 1/r_N], [r_N, 0]]``.

    ``r_N`` is ``(p/n)^(1/2)``, exact if ``p/n`` is the square of a rational
    and a rational fit of degree ``fit_degree`` otherwise. ``g = f n s`` with
    ``s`` the same branch of ``(p/n)^(1/2)``, so that ``g / r_N = f n`` and
    ``g r_N = f p`` whenever the fit is exact.
    """
    grid = f.grid
    t = grid.nodes
    q, root = _sqrt_ratio(p, n)
    if root is not None:
        r_N, err, converged = root, 0.0, True
        s_vals = root(t)
    else:
        src = lambda x: pair_sqrt(q, x)
        s_vals = src(t)
        lo = pair_sqrt(q, np.array([-1e12]))[0]
        if abs(lo - np.sqrt(q.gain)) > 1e-5 * abs(np.sqrt(q.gain)):
            raise BranchError("(p/n)^(1/2) has different limits at -infinity and +infinity")
        target = GridFunction(grid, s_vals, np.sqrt(q.gain), src)
        fit = fit_rational(target, fit_degree, tol)
        r_N, err, converged = fit.approximant, fit.max_error, fit.converged
    g_vals = f.values * n(t) * s_vals
    ns = None if root is None else n * root
    if ns is not None and ns.degree[0] == ns.degree[1]:
        g_lim = f.limit * ns.limit
    else:
        g_lim = limit_from_samples(g_vals, grid)
    g_src = None
    if f.source is not None:
        fs, sfun = f.source, (root if root is not None else (lambda x: pair_sqrt(q, x)))
        g_src = lambda x: fs(x) * n(x) * sfun(x)
    g = GridFunction(grid, g_vals, g_lim, g_src)
    return AbrahamsReduction(DKMatrix(g, RationalJ(r_N)), r_N, err, root is not None, converged)


@dataclass(frozen=True, eq=False)
class MeromorphicFactorization:
    """Meromorphic factors of ``K_N`` and, when available, the pole-free final factors.

    The final factors satisfy ``K_N = final_minus @ final_plus``.
    """

    base: MatrixFactorization
    removal: Optional[list] = None
    final_plus: Optional[np.ndarray] = None
    final_minus: Optional[np.ndarray] = None
    det_removal_error: Optional[float] = None
    final_residual: Optional[float] = None
    remaining_poles: Tuple[complex, ...] = ()
    final_defect: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"base": self.base.to_dict()}
        if self.removal is not None:
            d["removal"] = [[e.to_dict() for e in row] for row in self.removal]
            d["det_removal_error"] = self.det_removal_error
            d["final_residual"] = self.final_residual
            d["final_defect"] = self.final_defect
            d["remaining_poles"] = [[p.real, p.imag] for p in self.remaining_poles]
        return d


def meromorphic_factorize(K_N: DKMatrix, tol: float = DEFAULT_TOL) -> MeromorphicFactorization:
    """Factor ``I + g J_N`` in the commutative class; the singularities of ``J_N`` stay in the factors."""
    if not isinstance(K_N.J, RationalJ):
        raise PreconditionViolated("meromorphic_factorize expects the rational J_N of an Abrahams reduction")
    return MeromorphicFactorization(dk_factorize(K_N, tol))


# --------------------------------------------------------------------------
# pole removal for constant f

def pinned_c(k: float, epsilon: float) -> float:
    """The coefficient ``c`` for which the removal matrix of the constant-``f`` example works."""
    return -(k + 1) / (epsilon * k) - k


def removal_matrix(k: float) -> list:
    """``M = [[1 + (i/2)/(t-i) + (i/2k)/(t+i), (i/2)/(t-i) + (i/2k)/(t+i)], [1, 1]]``."""
    # entries may vanish on the line (M12 does at t = 0), so they are non-strict
    a = RationalFunction([], [1j], 0.5j, strict=False)
    b = RationalFunction([], [-1j], 0.5j / k, strict=False)
    one = RationalFunction([], [], 1.0, strict=False)
    return [[one + a + b, a + b], [one, one]]


def _rat_matmul(A, B):
    return [[A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)] for i in range(2)]


def _rat_values(A, t) -> np.ndarray:
    return np.array([[A[i][j](t) for j in range(2)] for i in range(2)])


def _zero_rat() -> RationalFunction:
    return RationalFunction([], [], 0.0)


def stable_symbol(k: float, epsilon: float, c: float, grid: Grid) -> np.ndarray:
    """``[[m, eps k], [c eps k, 1/m]]`` on the grid."""
    m = grid.circle
    out = np.empty((2, 2, grid.n), dtype=complex)
    out[0, 0], out[1, 1] = m, 1 / m
    out[0, 1] = epsilon * k
    out[1, 0] = c * epsilon * k
    return out


def pole_removal_example(k: float, epsilon: float, c: Optional[float] = None,
                         grid: Optional[Grid] = None) -> MeromorphicFactorization:
    """Pole-free factorisation of ``K = I + eps k [[0, 1/(t^2+1)], [c (t^2+1), 0]]``.

    The meromorphic factors are ``Q_pm = I + x_pm J_N`` with ``J_N`` from the
    (exact) Abrahams reduction, ``x_plus = -sqrt(c)`` and ``x_minus = -sqrt(c)/k``,
    so that ``K = Q_minus Q_plus / (1 + x_minus x_plus)``. The rational matrix
    ``M`` moves the pole at ``i`` out of the plus factor and the pole at ``-i``
    out of the minus factor. This choice of ``x_pm`` reproduces ``K`` only for
    ``c = -(k + 1)/(eps k) - k``; other ``c`` raise PreconditionViolated.
    """
    if k == 0 or epsilon == 0:
        raise PreconditionViolated("pole removal needs k != 0 and epsilon != 0")
    cp = pinned_c(k, epsilon)
    if c is None:
        c = cp
    elif abs(c - cp) > 1e-12 * max(1.0, abs(cp)):
        raise PreconditionViolated(f"the removal matrix only applies for c = {cp!r}, got {c!r}")
    grid = grid or moebius_grid()
    t = grid.nodes
    n = RationalFunction([], [1j, -1j], 1.0)
    p = RationalFunction([1j, -1j], [], c)
    f = GridFunction.constant(epsilon * k, grid)
    red = abrahams_reduce(n, p, f)
    r_N = red.r_N
    sc = r_N.gain
    x_p, x_m = -sc, -sc / k
    g = epsilon * k * sc
    lam = 1 + x_m * x_p
    if abs((x_m + x_p) / lam - g) > 1e-12 * max(1.0, abs(g)):
        raise PreconditionViolated("x_plus, x_minus do not reproduce the symbol")
    one = RationalFunction([], [], 1.0, strict=False)

    def Q(x):
        return [[one, (1 / r_N) * x], [r_N * x, one]]

    Qp, Qm = Q(x_p), Q(x_m)
    K_vals = red.symbol.values()
    plus_vals = _rat_values(Qp, t)
    minus_vals = _rat_values(Qm, t) / lam
    base_poles = (1j, -1j)
    # entries grow like t^2, so residuals are measured relative to |K| + 1
    base_res = float(np.max(np.abs(matmul(minus_vals, plus_vals) - K_vals) / (1 + np.abs(K_vals))))
    base = MatrixFactorization(grid, plus_vals, minus_vals, (0, 0), base_res, base_poles, 2)

    M = removal_matrix(k)
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    probe = np.concatenate([t[:: max(1, grid.n // 64)], [0.3 + 2j, -1.5 - 0.7j, 4 + 0.1j]])
    det_err = float(np.max(np.abs(det(probe) - 1)))
    if det.degree != (0, 0):
        det_err = max(det_err, float(np.max(np.abs(det(probe + 0.5j) - 1))))
    Minv = [[M[1][1], -M[0][1]], [-M[1][0], M[0][0]]]
    left = _rat_matmul(Qm, M)
    right = _rat_matmul(Minv, Qp)
    left = [[e / lam for e in row] for row in left]
    remaining = []
    for row in left:
        for e in row:
            remaining += [q for q in e.poles if q.imag < 0]
    for row in right:
        for e in row:
            remaining += [q for q in e.poles if q.imag > 0]
    # sample the final factors as products of sampled matrices (no root finding)
    M_vals = _rat_values(M, t)
    Minv_vals = _rat_values(Minv, t)
    fm = matmul(_rat_values(Qm, t), M_vals) / lam
    fp = matmul(Minv_vals, plus_vals)
    residual = float(np.max(np.abs(matmul(fm, fp) - K_vals) / (1 + np.abs(K_vals))))
    defect = max(max(analyticity_defect(fm[i, j], grid, "minus", 2) for i in range(2) for j in range(2)),
                 max(analyticity_defect(fp[i, j], grid, "plus", 2) for i in range(2) for j in range(2)))
    return MeromorphicFactorization(base, M, fp, fm, det_err, residual, tuple(remaining), defect)
