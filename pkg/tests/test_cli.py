import json
import math

import numpy as np
import pytest

from afcopt.cli import main
from afcopt.comb import MemoryParams, Tabulated, save_tabulated_csv
from afcopt.efficiency import efficiency


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_optimal_square(capsys):
    code, out, _ = run(capsys, "eval", "--shape", "square", "--half-width-pT", "0.561", "--od", "10")
    assert code == 0
    assert json.loads(out)["eta"] == pytest.approx(0.481, abs=5e-4)


def test_eval_zero_width(capsys):
    code, out, _ = run(capsys, "eval", "--shape", "square", "--half-width-pT", "0", "--od", "10")
    assert code == 0 and json.loads(out)["eta"] == 0.0


def test_dimensionless_wins_with_warning(capsys, caplog):
    code, out, _ = run(capsys, "eval", "--half-width-pT", "0.5", "--od", "10", "--T", "3", "--L", "2")
    assert code == 0 and "ignoring" in caplog.text
    assert json.loads(out)["eta"] == pytest.approx(100 * math.sin(0.5) ** 2 / math.pi**2 * math.exp(-5 / math.pi))


def test_eval_tabulated_matches_library(tmp_path, capsys):
    T = 1e-6
    om = np.linspace(-np.pi / T, np.pi / T, 129)
    vals = 1000.0 * (1 + np.cos(om * T)) ** 2 / 4
    shape = Tabulated(om, vals)
    path = tmp_path / "comb.csv"
    save_tabulated_csv(shape, path)
    code, out, _ = run(capsys, "eval", "--shape", "tabulated", "--file", str(path), "--T", "1e-6", "--L", "0.01",
                       "--alpha-max", "2000")
    assert code == 0
    ref = efficiency(shape, MemoryParams(T, 0.01, 2000.0)).eta
    assert json.loads(out)["eta"] == pytest.approx(ref, rel=1e-12)


def test_round_trip_efficiency(tmp_path):
    T = 1e-6
    om = np.linspace(-np.pi / T, np.pi / T, 257)
    vals = np.abs(np.sin(3 * om * T)) * 500
    vals[-1] = vals[0]
    shape = Tabulated(om, vals)
    save_tabulated_csv(shape, tmp_path / "a.csv")
    from afcopt.comb import load_tabulated_csv

    back = load_tabulated_csv(tmp_path / "a.csv")
    p = MemoryParams(T, 0.02, 500.0)
    assert efficiency(back, p).eta == pytest.approx(efficiency(shape, p).eta, rel=1e-12)


def test_config_errors(capsys, tmp_path):
    assert run(capsys, "eval", "--od", "-1")[0] == 2
    assert run(capsys, "eval", "--shape", "tabulated")[0] == 2
    assert run(capsys, "eval", "--shape", "lorentzian", "--od", "3")[0] == 2
    assert run(capsys, "eval", "--shape", "tabulated", "--file", str(tmp_path / "missing.csv"))[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_numeric_failure_exit_code(capsys, caplog):
    code, _, _ = run(capsys, "simulate", "--od", "10", "--field-points", "64", "--knots-per-period", "8",
                       "--check-convergence")
    assert code == 3 and "numerical failure" in caplog.text


def test_optimize_and_compare(capsys):
    code, out, _ = run(capsys, "optimize", "--family", "square", "--od", "10")
    data = json.loads(out)
    assert code == 0 and data["p_opt"] == pytest.approx(math.atan(2 * math.pi / 10), abs=1e-7)
    code, out, _ = run(capsys, "optimize", "--od", "10", "--bg-od", "2")
    assert json.loads(out)["p_opt"] == pytest.approx(math.atan(2 * math.pi / 8), abs=1e-7)
    code, out, _ = run(capsys, "compare", "--od", "10")
    fams = json.loads(out)["families"]
    assert fams["square"]["eta_opt"] > fams["gaussian"]["eta_opt"] > fams["lorentzian"]["eta_opt"]


def test_map_outputs_deterministic(tmp_path, capsys):
    args = ["map", "--p-steps", "12", "--od-steps", "10", "--diff", "--format", "csv", "--format", "json"]
    assert run(capsys, *args, "--out-dir", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *args, "--out-dir", str(tmp_path / "b"))[0] == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(names) == 14
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    rows = (tmp_path / "a" / "EtaSquare.csv").read_text().splitlines()
    assert rows[0] == "p,od,value" and len(rows) == 121


def test_map_png(tmp_path, capsys):
    code, _, _ = run(capsys, "map", "--p-steps", "8", "--od-steps", "8", "--format", "png", "--figure-norm",
                     "--out-dir", str(tmp_path))
    assert code == 0 and (tmp_path / "EtaSquare.png").exists()


def test_verify_single_seed_both_regimes(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    code, _, _ = run(capsys, "verify", "--seed", "5", "--symmetric", "--lemma2", "--out", str(out))
    assert code == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(rows) == 2 and all(r["pass"] and r["symmetric"] for r in rows)
    half_widths = sorted(r["area"] / 2 for r in rows)
    assert half_widths[0] < math.pi / 2 < half_widths[1]


def test_verify_batch_is_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "verify", "--n-seeds", "20", "--out", str(tmp_path / f"{name}.jsonl"))[0] == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_simulate_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--od", "10", "--field-csv", str(tmp_path / "f.csv"),
                       "--summary-json", str(tmp_path / "s.json"))
    assert code == 0
    summary = json.loads((tmp_path / "s.json").read_text())
    assert summary["rel_error"] <= 0.02
    assert (tmp_path / "f.csv").read_text().startswith("t_s,re,im\n")


def test_simulate_trivial_absorbers(capsys):
    code, out, _ = run(capsys, "simulate", "--shape", "none", "--od", "4")
    data = json.loads(out)
    assert data["a0_re"] == pytest.approx(1.0, abs=1e-9) and abs(data["a1_re"]) < 1e-9
    code, out, _ = run(capsys, "simulate", "--shape", "flat", "--od", "4")
    data = json.loads(out)
    assert data["a0_re"] ** 2 + data["a0_im"] ** 2 == pytest.approx(math.exp(-4), rel=0.01)
