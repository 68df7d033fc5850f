"""Command-line front-end: ``wh-factor {factor-scalar, factor-dk, compare-methods, stability}``.

Exit codes: 0 when every residual and defect check passes, 2 on argument or
input parse failures, 3 when a factorisation raises or a check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .dk import (DKMatrix, MatrixFactorization, _split_theta, dk_parameters, EntireMatrixJ, dk_factorize,
                 dk_partial_indices, rational_dk_split, assemble)
from .errors import FactorizationError, MaxDegreeReached, UnsupportedJ
from .rational import RationalFunction, fit_rational
from .realline import DEFAULT_GRID_SIZE, DEFAULT_TOL, GridFunction, _l2, moebius_grid
from .scalar import factorize_scalar
from .stability import (lemma_bounds, perturbation_sweep, pole_removal_example,
                        SLOPE_TOL, unstable_example)
from .symbols import DK_SYMBOLS, parse_scalar_symbol

EXIT_OK, EXIT_PARSE, EXIT_FAIL = 0, 2, 3
ORACLE_TOL = 1e-6
DEFECT_TOL = 1e-6
DET_TOL = 1e-12
GRID_ENV = "WH_FACTOR_GRID"


class ParseFailure(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    grid_size: int = DEFAULT_GRID_SIZE
    tolerance: float = DEFAULT_TOL
    output_format: str = "json"
    output_path: Path = Path(".")
    seed: int = 0

    def __post_init__(self):
        n = self.grid_size
        if n < 2**8 or n > 2**20 or n & (n - 1):
            raise ParseFailure(f"--grid-size must be a power of two in [2^8, 2^20], got {n}")
        if not (0 < self.tolerance <= 1e-2):
            raise ParseFailure(f"--tol must lie in (0, 1e-2], got {self.tolerance}")
        if self.output_format not in ("json", "csv"):
            raise ParseFailure(f"unknown format {self.output_format!r}")


def _default_grid() -> int:
    env = os.environ.get(GRID_ENV)
    if env is None:
        return DEFAULT_GRID_SIZE
    try:
        return int(env)
    except ValueError:
        raise ParseFailure(f"{GRID_ENV}={env!r} is not an integer")


def _parse_degree(text: str) -> int:
    try:
        val = json.loads(text)
    except json.JSONDecodeError:
        raise ParseFailure(f"--degree must look like [p,q], got {text!r}")
    if isinstance(val, int):
        val = [val, val]
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(v, int) and v >= 0 for v in val)):
        raise ParseFailure(f"--degree must look like [p,q] with nonnegative integers, got {text!r}")
    if val[0] != val[1]:
        raise ParseFailure("--degree needs equal numerator and denominator degrees")
    return val[0]


# --------------------------------------------------------------------------
# output helpers

def _write(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.output_path.mkdir(parents=True, exist_ok=True)
    path = cfg.output_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _csv(header: List[str], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def _report(checks: dict) -> int:
    failed = [k for k, ok in checks.items() if not ok]
    for k, ok in checks.items():
        print(f"check {k}: {'ok' if ok else 'FAILED'}")
    return EXIT_FAIL if failed else EXIT_OK


# --------------------------------------------------------------------------
# commands

def cmd_factor_scalar(args, cfg: RunConfig) -> int:
    try:
        sym = parse_scalar_symbol(args.symbol)
    except ValueError as exc:
        raise ParseFailure(str(exc))
    grid = moebius_grid(cfg.grid_size)
    K = sym.sample(grid)
    fac = factorize_scalar(K, cfg.tolerance)
    t = grid.nodes
    name = args.symbol.replace(":", "_").replace("/", "_over_").replace(",", "_")
    if cfg.output_format == "json":
        _write(cfg, f"{name}_factorization.json", _dump(fac.to_dict()))
    else:
        _write(cfg, f"{name}_plus.csv", fac.plus.to_csv())
        _write(cfg, f"{name}_minus.csv", fac.minus.to_csv())
    _write(cfg, f"{name}_modulus.csv",
           _csv(["t", "abs_plus", "abs_minus"], [t, np.abs(fac.plus.values), np.abs(fac.minus.values)]))
    print(f"kappa = {fac.index}")
    print(f"residual = {fac.residual:.3e}")
    checks = {"residual": fac.residual <= cfg.tolerance * max(1.0, K.sup())}
    if sym.plus is not None:
        err = max(np.max(np.abs(fac.plus.values - sym.plus(t))), np.max(np.abs(fac.minus.values - sym.minus(t))))
        print(f"closed-form factor error = {err:.3e}")
        checks["closed_form"] = err <= ORACLE_TOL
        checks["index"] = fac.index == sym.kappa
    return _report(checks)


def _load_dk_spec(path: str, grid) -> DKMatrix:
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
        J = EntireMatrixJ(spec["J"])
        fs = spec["f"]
        if "constant" in fs:
            c = fs["constant"]
            f = GridFunction.constant(complex(*c) if isinstance(c, list) else complex(c), grid)
        else:
            R = RationalFunction.from_dict(fs["rational"])
            f = GridFunction.from_callable(R, grid, R.limit)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ParseFailure(f"cannot read DK spec {path!r}: {exc}")
    return DKMatrix(f, J)


def cmd_factor_dk(args, cfg: RunConfig) -> int:
    grid = moebius_grid(cfg.grid_size)
    if args.spec:
        K = _load_dk_spec(args.spec, grid)
        name, expected = Path(args.spec).stem, None
    else:
        sym = DK_SYMBOLS[args.example]
        K, name, expected = sym.build(grid), sym.name, sym.indices
    fac = dk_factorize(K, cfg.tolerance)
    try:
        indices = dk_partial_indices(K)
    except UnsupportedJ:
        indices = fac.partial_indices
    defects = fac.analyticity_defects()
    t = grid.nodes
    if cfg.output_format == "json":
        out = fac.to_dict()
        out["partial_indices"] = list(indices)
        out["analyticity_defects"] = defects
        _write(cfg, f"{name}_factorization.json", _dump(out))
    else:
        for side in ("plus", "minus"):
            for i in range(2):
                for j in range(2):
                    _write(cfg, f"{name}_{side}_a{i + 1}{j + 1}.csv", fac.entry(side, i, j).to_csv())
    _write(cfg, f"{name}_plus_modulus.csv",
           _csv(["t", "abs_a11", "abs_a12", "abs_a21", "abs_a22"],
                [t] + [np.abs(fac.plus[i, j]) for i in range(2) for j in range(2)]))
    print(f"partial indices = {indices}")
    print(f"residual = {fac.residual:.3e}")
    print(f"max analyticity defect = {max(defects.values()):.3e}")
    checks = {"residual": fac.residual <= cfg.tolerance,
              "analyticity": max(defects.values()) <= DEFECT_TOL,
              "indices_sum": sum(indices) == sum(fac.partial_indices)}
    if expected is not None:
        checks["indices"] = tuple(indices) == tuple(expected)
    return _report(checks)


def a11_bound(K: DKMatrix, K_N: DKMatrix, exact_split, approx_split, report) -> float:
    """L2 bound on the difference of the (1,1) entries of the plus factors.

    ``a11 = r_plus cosh(Delta theta_plus / 2)``; the mean value theorem gives
    ``|a11 - a11~| <= sup|r_plus| sup|Delta/2 sinh(.)| |theta_plus - theta_plus~|
    + sup|cosh(Delta theta_plus~ / 2)| |r_plus - r_plus~|``.
    """
    r_p, th_p, delta = exact_split
    th_pt = approx_split.theta_plus
    sinh_sup = max(np.max(np.abs(np.sinh(delta * th_p / 2))), np.max(np.abs(np.sinh(delta * th_pt / 2))))
    cosh_sup = np.max(np.abs(np.cosh(delta * th_pt / 2)))
    return float(np.max(np.abs(r_p)) * abs(delta) / 2 * sinh_sup * report.theta_split_bound
                 + cosh_sup * report.r_factor_bound)


def cmd_compare_methods(args, cfg: RunConfig) -> int:
    degree = _parse_degree(args.degree)
    sym = DK_SYMBOLS[args.example]
    grid = moebius_grid(cfg.grid_size)
    t = grid.nodes
    K = sym.build(grid)

    t0 = time.perf_counter()
    exact = dk_factorize(K, cfg.tolerance)
    t_exact = time.perf_counter() - t0

    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MaxDegreeReached)
        fit = fit_rational(K.f, degree, tol=1e-13)
    t_fit = time.perf_counter() - t0

    t0 = time.perf_counter()
    s = rational_dk_split(fit.approximant, K.J, t)
    delta_arr = np.full(t.size, s.delta)
    plus_N = assemble(s.r_plus, s.theta_plus, delta_arr, K.J, t)
    minus_N = assemble(s.r_minus, s.theta_minus, delta_arr, K.J, t)
    t_approx = time.perf_counter() - t0

    f_N = GridFunction.from_callable(fit.approximant, grid, fit.approximant.limit)
    K_N = K.with_f(f_N)
    approx = MatrixFactorization(grid, plus_N, minus_N, (s.kappa, s.kappa), 0.0)
    approx_res = float(np.max(np.abs(approx.reconstruct() - K_N.values())))

    diff = exact.plus[0, 0] - plus_N[0, 0]
    sup_diff = float(np.max(np.abs(diff)))
    l2_diff = _l2(diff, grid)
    result = {"example": sym.name, "degree": [degree, degree], "fit_max_error": fit.max_error,
              "fit_converged": fit.converged, "exact_residual": exact.residual,
              "approximate_residual": approx_res, "a11_sup_difference": sup_diff,
              "a11_l2_difference": l2_diff}
    checks = {"exact_residual": exact.residual <= cfg.tolerance,
              "approximate_residual": approx_res <= cfg.tolerance}
    warn_only = degree == 0
    if exact.partial_indices == (0, 0):
        rep = lemma_bounds(K, K_N)
        params = dk_parameters(K)
        sf = factorize_scalar(params.r, cfg.tolerance)
        th_p, _ = _split_theta(params.theta, cfg.tolerance)
        bound = a11_bound(K, K_N, (sf.plus.values, th_p, params.delta[0]), s, rep)
        result.update({"symbol_distance": rep.epsilon, "a11_bound": bound})
        print(f"symbol distance = {rep.epsilon:.3e}, a11 bound = {bound:.3e}")
        checks["a11_within_bound"] = sup_diff <= bound and l2_diff <= bound
    _write(cfg, f"{sym.name}_a11_difference.csv",
           _csv(["t", "re", "im", "abs"], [t, diff.real, diff.imag, np.abs(diff)]))
    if cfg.output_format == "json":
        _write(cfg, f"{sym.name}_compare.json", _dump(result))
    else:
        keys = sorted(result)
        _write(cfg, f"{sym.name}_compare.csv",
               ",".join(keys) + "\n" + ",".join(json.dumps(result[k]).replace(",", ";") for k in keys) + "\n")
    print(f"a11 sup difference = {sup_diff:.3e}, L2 = {l2_diff:.3e}")
    print(f"time exact = {t_exact:.4f}s, fit = {t_fit:.4f}s, approximate = {t_approx:.4f}s")
    if t_approx >= t_exact:
        print("warning: the approximate factorisation was not faster than the exact one on this machine")
    if warn_only:
        print("warning: degree [0,0] is a constant fit; the difference is expected to be large")
        checks = {k: v for k, v in checks.items() if k != "a11_within_bound"}
    return _report(checks)


def _example_symbol(name: str, grid):
    return DK_SYMBOLS[name].build(grid)


def cmd_stability(args, cfg: RunConfig) -> int:
    grid = moebius_grid(cfg.grid_size)
    sub = args.stability_command
    if sub == "unstable":
        base, pert = unstable_example(args.epsilon, grid)
        out = {"epsilon": args.epsilon,
               "base": {"indices": list(base.partial_indices), "residual": base.residual},
               "perturbed": {"indices": list(pert.partial_indices), "residual": pert.residual}}
        _write(cfg, "unstable.json" if cfg.output_format == "json" else "unstable.csv",
               _dump(out) if cfg.output_format == "json" else
               "factorisation,kappa1,kappa2,residual\n"
               f"base,{base.partial_indices[0]},{base.partial_indices[1]},{base.residual!r}\n"
               f"perturbed,{pert.partial_indices[0]},{pert.partial_indices[1]},{pert.residual!r}\n")
        k = pert.partial_indices
        print(f"partial indices = {k}, sum = {sum(k)}")
        return _report({"residual": max(base.residual, pert.residual) <= cfg.tolerance,
                        "index_sum": sum(k) == sum(base.partial_indices)})
    if sub == "sweep":
        K = _example_symbol(args.example, grid)
        res = perturbation_sweep(K, args.count, seed=cfg.seed)
        _write(cfg, f"sweep_{args.example}.csv", res.to_csv())
        _write(cfg, f"sweep_{args.example}_summary.json", _dump(res.summary()))
        sm = res.summary()
        rate = sm["passes"] / sm["admissible"] if sm["admissible"] else float("nan")
        print(f"draws = {sm['draws']}, admissible = {sm['admissible']}, pass rate = {rate:.3f}")
        print(f"slope = {sm['slope']:.4f}")
        return _report({"all_pass": sm["passes"] == sm["admissible"] and sm["admissible"] > 0,
                        "linear": abs(sm["slope"] - 1) <= SLOPE_TOL})
    if sub == "bounds":
        degree = _parse_degree(args.degree)
        K = _example_symbol(args.example, grid)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxDegreeReached)
            fit = fit_rational(K.f, degree, tol=1e-13)
        K_N = K.with_f(GridFunction.from_callable(fit.approximant, grid, fit.approximant.limit))
        rep = lemma_bounds(K, K_N, with_slack=True)
        _write(cfg, f"bounds_{args.example}.json", _dump(rep.to_dict()))
        print(f"epsilon = {rep.epsilon:.3e}")
        print(f"r: {rep.measured_r:.3e} <= {rep.r_bound:.3e}; theta: {rep.measured_theta:.3e} <= {rep.theta_bound:.3e}")
        return _report(rep.checks())
    if sub == "abrahams":
        mf = pole_removal_example(args.k, args.epsilon, grid=grid)
        out = mf.to_dict() if cfg.output_format == "json" else None
        summary = {"k": args.k, "epsilon": args.epsilon, "det_removal_error": mf.det_removal_error,
                   "final_residual": mf.final_residual, "final_defect": mf.final_defect,
                   "remaining_poles": len(mf.remaining_poles), "base_residual": mf.base.residual}
        if out is not None:
            out["summary"] = summary
            _write(cfg, "pole_removal.json", _dump(out))
        else:
            keys = sorted(summary)
            _write(cfg, "pole_removal.csv", ",".join(keys) + "\n" + ",".join(repr(summary[k]) for k in keys) + "\n")
        print(f"det M error = {mf.det_removal_error:.3e}, final residual = {mf.final_residual:.3e}, "
              f"defect = {mf.final_defect:.3e}")
        return _report({"det_M": mf.det_removal_error <= DET_TOL,
                        "residual": mf.final_residual <= cfg.tolerance,
                        "defect": mf.final_defect <= DEFECT_TOL,
                        "poles_removed": not mf.remaining_poles})
    raise ParseFailure(f"unknown stability command {sub!r}")


# --------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-size", type=int, default=None,
                        help=f"number of grid nodes (power of two; default ${GRID_ENV} or {DEFAULT_GRID_SIZE})")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual tolerance")
    common.add_argument("--format", choices=["json", "csv"], default="json", dest="output_format")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=0)

    parser = argparse.ArgumentParser(prog="wh-factor", description="Wiener-Hopf factorisation of scalar and Daniele-Khrapkov symbols.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("factor-scalar", parents=[common], help="factorise a scalar symbol")
    p.add_argument("--symbol", required=True, help="one, f-example-k2, k-third-ex or rational:NUM/DEN")
    p.set_defaults(func=cmd_factor_scalar)

    p = sub.add_parser("factor-dk", parents=[common], help="factorise a Daniele-Khrapkov matrix")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--example", choices=sorted(DK_SYMBOLS))
    g.add_argument("--spec", help="JSON file {J: 2x2 coefficient lists, f: {constant|rational}}")
    p.set_defaults(func=cmd_factor_dk)

    p = sub.add_parser("compare-methods", parents=[common], help="Cauchy-integral vs rational factorisation")
    p.add_argument("--example", choices=sorted(DK_SYMBOLS), required=True)
    p.add_argument("--degree", default="[8,8]")
    p.set_defaults(func=cmd_compare_methods)

    p = sub.add_parser("stability", help="perturbation bounds and instability examples")
    ssub = p.add_subparsers(dest="stability_command", required=True)
    q = ssub.add_parser("bounds", parents=[common])
    q.add_argument("--example", choices=["k1"], default="k1")
    q.add_argument("--degree", default="[8,8]")
    q = ssub.add_parser("sweep", parents=[common])
    q.add_argument("--example", choices=["k1"], default="k1")
    q.add_argument("--count", type=int, default=100)
    q = ssub.add_parser("unstable", parents=[common])
    q.add_argument("--epsilon", type=float, required=True)
    q = ssub.add_parser("abrahams", parents=[common])
    q.add_argument("--k", type=float, default=1.0)
    q.add_argument("--epsilon", type=float, default=1e-2)
    p.set_defaults(func=cmd_stability)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        grid_size = args.grid_size if args.grid_size is not None else _default_grid()
        cfg = RunConfig(grid_size, args.tol, args.output_format, args.out, args.seed)
        return args.func(args, cfg)
    except ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FactorizationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
