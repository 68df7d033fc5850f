import csv
import json

import pytest

from whfactor.cli import EXIT_FAIL, EXIT_OK, EXIT_PARSE, main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_factor_scalar_outputs(tmp_path, capsys):
    assert run(tmp_path, "factor-scalar", "--symbol", "f-example-k2") == EXIT_OK
    out = capsys.readouterr().out
    assert "kappa = 0" in out
    d = json.loads((tmp_path / "f-example-k2_factorization.json").read_text())
    assert d["kappa"] == 0 and d["residual"] < 1e-8
    rows = list(csv.reader((tmp_path / "f-example-k2_modulus.csv").open()))
    assert rows[0] == ["t", "abs_plus", "abs_minus"] and len(rows) == 4097


def test_factor_scalar_index(tmp_path, capsys):
    assert run(tmp_path, "factor-scalar", "--symbol", "k-third-ex") == EXIT_OK
    assert "kappa = -1" in capsys.readouterr().out


def test_factor_scalar_trivial_and_rational(tmp_path):
    assert run(tmp_path, "factor-scalar", "--symbol", "one") == EXIT_OK
    assert run(tmp_path, "factor-scalar", "--symbol", "rational:1,0,1/1,0,4", "--format", "csv") == EXIT_OK


@pytest.mark.parametrize("args", [
    ["factor-scalar", "--symbol", "nonsense"],
    ["factor-scalar", "--symbol", "rational:1,2"],
    ["factor-scalar", "--symbol", "one", "--grid-size", "1000"],
    ["factor-scalar", "--symbol", "one", "--grid-size", "128"],
    ["factor-scalar", "--symbol", "one", "--tol", "0.5"],
    ["compare-methods", "--example", "k1", "--degree", "[4,3]"],
    ["compare-methods", "--example", "k1", "--degree", "eight"],
])
def test_parse_failures(tmp_path, args):
    assert run(tmp_path, *args) == EXIT_PARSE


def test_argparse_failure_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(tmp_path, "factor-scalar")
    assert exc.value.code == 2


def test_factorisation_failure_exit_code(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    # 1 + 2 f^2 vanishes for f = i / sqrt(2)
    spec.write_text(json.dumps({"J": [[0, 1], [-2, 0]], "f": {"constant": [0, 0.7071067811865476]}}))
    assert run(tmp_path, "factor-dk", "--spec", str(spec)) == EXIT_FAIL
    assert "ZeroOnLine" in capsys.readouterr().err


def test_env_grid_size(tmp_path, monkeypatch):
    monkeypatch.setenv("WH_FACTOR_GRID", "512")
    assert run(tmp_path, "factor-scalar", "--symbol", "one") == EXIT_OK
    d = json.loads((tmp_path / "one_factorization.json").read_text())
    assert d["plus"]["grid"]["n"] == 512
    monkeypatch.setenv("WH_FACTOR_GRID", "x")
    assert run(tmp_path, "factor-scalar", "--symbol", "one") == EXIT_PARSE


@pytest.mark.parametrize("name,indices", [("k1", "(0, 0)"), ("k2", "(-1, -1)")])
def test_factor_dk_examples(tmp_path, capsys, name, indices):
    assert run(tmp_path, "factor-dk", "--example", name) == EXIT_OK
    assert f"partial indices = {indices}" in capsys.readouterr().out
    assert (tmp_path / f"{name}_plus_modulus.csv").exists()


def test_factor_dk_zero_spec(tmp_path):
    spec = tmp_path / "f0.json"
    spec.write_text(json.dumps({"J": [[0, 1], [-2, 0]], "f": {"constant": 0}}))
    assert run(tmp_path, "factor-dk", "--spec", str(spec)) == EXIT_OK
    d = json.loads((tmp_path / "f0_factorization.json").read_text())
    assert d["plus"]["a11"]["limit"] == [1.0, 0.0]
    assert d["plus"]["a12"]["limit"] == [0.0, 0.0]


def test_factor_dk_rational_spec(tmp_path):
    spec = tmp_path / "rat.json"
    rat = {"zeros": [[0, 1], [0, -1]], "poles": [[0, 2], [0, -2]], "gain": [0.5, 0]}
    spec.write_text(json.dumps({"J": [[0, 1], [-2, 0]], "f": {"rational": rat}}))
    assert run(tmp_path, "factor-dk", "--spec", str(spec), "--format", "csv") == EXIT_OK
    assert (tmp_path / "rat_minus_a22.csv").exists()


def test_compare_methods(tmp_path, capsys):
    assert run(tmp_path, "compare-methods", "--example", "k1") == EXIT_OK
    out = capsys.readouterr().out
    assert "a11 bound" in out and "time exact" in out
    d = json.loads((tmp_path / "k1_compare.json").read_text())
    assert d["a11_sup_difference"] <= d["a11_bound"]
    assert (tmp_path / "k1_a11_difference.csv").exists()


def test_compare_methods_constant_fit(tmp_path, capsys):
    assert run(tmp_path, "compare-methods", "--example", "k1", "--degree", "[0,0]") == EXIT_OK
    out = capsys.readouterr().out
    assert "warning: degree [0,0]" in out
    d = json.loads((tmp_path / "k1_compare.json").read_text())
    assert d["a11_sup_difference"] > 1e-3


def test_compare_methods_k2(tmp_path):
    assert run(tmp_path, "compare-methods", "--example", "k2") == EXIT_OK
    d = json.loads((tmp_path / "k2_compare.json").read_text())
    assert d["exact_residual"] < 1e-8 and d["approximate_residual"] < 1e-8


def test_stability_unstable(tmp_path, capsys):
    assert run(tmp_path, "stability", "unstable", "--epsilon", "1e-3") == EXIT_OK
    assert "partial indices = (0, 0), sum = 0" in capsys.readouterr().out
    assert run(tmp_path, "stability", "unstable", "--epsilon", "0") == EXIT_OK
    assert "partial indices = (1, -1), sum = 0" in capsys.readouterr().out


def test_stability_sweep_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["stability", "sweep", "--example", "k1", "--count", "8", "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert main(["stability", "sweep", "--example", "k1", "--count", "8", "--seed", "7", "--out", str(b)]) == EXIT_OK
    assert "pass rate = 1.000" in capsys.readouterr().out
    for name in ("sweep_k1.csv", "sweep_k1_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert len((a / "sweep_k1.csv").read_text().splitlines()) == 9


def test_stability_bounds_and_abrahams(tmp_path):
    assert run(tmp_path, "stability", "bounds") == EXIT_OK
    assert json.loads((tmp_path / "bounds_k1.json").read_text())["passed"] is True
    assert run(tmp_path, "stability", "abrahams") == EXIT_OK
    d = json.loads((tmp_path / "pole_removal.json").read_text())
    assert d["summary"]["remaining_poles"] == 0
