import csv
import io
import json
import math

import pytest

from tradeability.cli import RunConfig, UsageError, main
from tradeability.european import euro_price
from tradeability.levy_core import esscher_shift
from tradeability.premium import BaseScenario, illiquidity_factor_det, illiquidity_factor_stoch


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_price_euro_matches_library(capsys):
    code, out, _ = run(capsys, "price", "euro", "--T", "0.5", "--e0", "1.2", "--s0", "2")
    assert code == 0
    (rec,) = json.loads(out)
    em = esscher_shift(*RunConfig(e0=1.2).models())
    assert rec["scaled"] == pytest.approx(euro_price(0.5, 1.2, em).price, abs=5e-7)
    assert rec["full"] == pytest.approx(2 * rec["scaled"], abs=2e-6)


def test_price_amer_exp_has_boundary_diagnostics(capsys):
    code, out, _ = run(capsys, "price", "amer", "--horizon", "exp", "--vartheta", "2")
    assert code == 0
    (rec,) = json.loads(out)
    assert rec["regime"] == "Standard" and rec["b_R"] > 1 and rec["gamma_plus"] > 1
    assert rec["scaled"] >= rec["euro"]


def test_premium_csv(capsys):
    code, out, _ = run(capsys, "premium", "--T", "1.5", "--e0", "1.1", "--format", "csv")
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    m, a = RunConfig(e0=1.1).models()
    assert float(row["factor"]) == pytest.approx(illiquidity_factor_det(1.5, 1.1, m, a), abs=5e-7)


def test_config_file_and_unknown_keys(tmp_path, capsys):
    good = tmp_path / "c.json"
    good.write_text(json.dumps({"b": 0.0, "rho": 0.5, "lambda": 0.5, "T": 2.0}))
    code, out, _ = run(capsys, "premium", "--config", str(good))
    assert code == 0 and json.loads(out)[0]["factor"] == 1.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"beta": 1.0}))
    code, _, err = run(capsys, "premium", "--config", str(bad))
    assert code == 2 and "beta" in json.loads(err)["message"]
    with pytest.raises(UsageError):
        RunConfig.from_mapping({"nope": 1})


def test_malformed_json_exits_2(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text("{bad")
    code, out, err = run(capsys, "price", "euro", "--config", str(p))
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "UsageError"


def test_inadmissible_scenario_exits_2(capsys):
    code, _, err = run(capsys, "premium", "--b", "0.05")
    assert code == 2
    assert json.loads(err)["error"] == "AdmissibilityError"
    code, _, err = run(capsys, "price", "euro", "--e0", "-1")
    assert code == 2


def test_table_structure_and_compare(capsys, tmp_path):
    code, out, err = run(capsys, "table", "det-b0", "--format", "csv", "--compare-baked")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 1 + 4 * 4 * 2 and all(len(r) == 4 + 9 for r in rows)
    assert rows[0][:4] == ["block", "sigma_x", "T", "e0"]
    assert "max_abs_delta" in err
    ref = tmp_path / "ref.csv"
    ref.write_text(out)
    code, _, err = run(capsys, "table", "det-b0", "--compare", str(ref))
    assert code == 0 and "max_abs_delta" in err


def test_unknown_table_exits_2(capsys):
    code, _, err = run(capsys, "table", "det-b1")
    assert code == 2 and "det-b1" in err


def test_figure_endpoints_match_scalar_calls(capsys):
    code, out, _ = run(capsys, "figure", "--param", "horizon", "--range", "0.5", "2.5", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["value"]) for r in rows] == [0.5, 1.5, 2.5]
    base = BaseScenario()
    m, a = base.models()
    assert float(rows[-1]["det"]) == pytest.approx(illiquidity_factor_det(2.5, 1.0, m, a), abs=5e-7)
    assert float(rows[0]["stoch"]) == pytest.approx(illiquidity_factor_stoch(2.0, 1.0, m, a), abs=5e-7)


def test_figure_defaults_are_base_scenario():
    base = BaseScenario.from_data()
    assert (base.rho, base.b) == (-0.5, -0.04)
    cfg = RunConfig()
    assert (cfg.rho, cfg.b, cfg.sigma_x, cfg.phi, cfg.lambda_) == (base.rho, base.b, base.sigma_x, base.phi, base.lambda_)


@pytest.mark.parametrize("argv", [["--values", ""], ["--range", "1", "2", "0"]])
def test_empty_sweep_exits_2(capsys, argv):
    code, _, err = run(capsys, "figure", "--param", "correlation", *argv)
    assert code == 2 and json.loads(err)["error"]


def test_outputs_are_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"o{k}.csv"
        assert main(["surface", "--T", "0.5", "--n-space", "201", "--points", "20", "--format", "csv",
                     "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 100


def test_boundary_command(capsys):
    code, out, _ = run(capsys, "boundary", "--T", "0.5", "--n-space", "201", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["tau"]) == 0.0 and all(float(r["boundary"]) >= 1.0 for r in rows)


def test_verify_reduced_paths_reports_errors(capsys):
    code, out, _ = run(capsys, "verify", "--paths", "4000", "--seed", "3")
    lines = out.strip().splitlines()
    assert lines and all("se=" in ln for ln in lines if ln.startswith(("PASS", "FAIL")))
    assert code == (1 if any(ln.startswith("FAIL") for ln in lines) else 0)
    code2, out2, _ = run(capsys, "verify", "--paths", "4000", "--seed", "3")
    assert (code2, out2) == (code, out)
