import json
import math

import numpy as np
import pytest

from wishart_stein import io
from wishart_stein.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bound_json(capsys):
    code, out, _ = run(capsys, "bound", "--n", "2", "--d", "100", "--r", "delta", "--s", "delta")
    assert code == 0
    rep = json.loads(out)
    assert rep["rhs_theorem"] == pytest.approx(1.6, rel=1e-15)
    assert rep["kind"] == "matrix" and rep["r"] == "delta"


def test_bound_inadmissible(capsys):
    code, _, err = run(capsys, "bound", "--n", "2", "--d", "100", "--r", "table:1,0.7")
    assert code == 2
    assert "||r||_1 < sqrt(6)/2" in err


def test_bound_vacuous(capsys):
    code, _, err = run(capsys, "bound", "--n", "3", "--d", "2", "--p", "3", "--s", "table:1,-1")
    assert code == 3 and "vacuous" in err


def test_tensor_bound_json(capsys):
    code, out, _ = run(capsys, "bound", "--n", "4", "--d", "100", "--p", "3", "--c-p", "2")
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "tensor" and rep["bound_note"] == "modulo c_p"
    assert rep["rhs_theorem"] == pytest.approx(2 * math.sqrt(4**5 / 100), rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["check", "--trials", "0"],
    ["bound", "--n", "2"],
    ["bound", "--n", "0", "--d", "3"],
    ["bound", "--n", "2", "--d", "3", "--r", "gauss:1"],
    ["frobnicate"],
    [],
])
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 64


def test_check_passes(capsys):
    code, out, _ = run(capsys, "check", "--trials", "20", "--oracle-trials", "3", "--seed", "4")
    assert code == 0
    rows = [line.split(",") for line in out.splitlines() if not line.startswith(("#", "check,"))]
    assert {r[1] for r in rows} == {"PASS"}
    assert rows[-1][0] == "oracle_equivalence"


def test_check_inadmissible_injection_skips(capsys):
    code, out, _ = run(capsys, "check", "--trials", "5", "--oracle-trials", "0", "--r", "table:1,0.7")
    assert code == 0
    rows = [line.split(",") for line in out.splitlines() if not line.startswith(("#", "check,"))]
    assert rows and all(r[1] == "SKIPPED" for r in rows)


def test_cov_independent(capsys):
    code, out, _ = run(capsys, "cov", "--n", "2", "--d", "10", "--r", "delta", "--s", "delta")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# index_map")
    assert lines[1] == "index,W_1_1,W_1_2,W_2_2"
    M = np.array([[float(v) for v in line.split(",")[1:]] for line in lines[2:]])
    np.testing.assert_array_equal(M, np.diag([2.0, 1.0, 2.0]))


def test_cov_tensor(capsys):
    code, out, _ = run(capsys, "cov", "--n", "3", "--d", "4", "--p", "2")
    assert code == 0 and out.splitlines()[1] == "index,Y_1_2,Y_1_3,Y_2_3"


def test_sample_twice_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["sample", "--n", "2", "--d", "3", "--m", "3", "--seed", "1", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = a.read_text().splitlines()
    assert rows[0] == "W_1_1,W_1_2,W_2_2" and len(rows) == 4


def test_sample_seed_honoured(capsys):
    _, a, _ = run(capsys, "sample", "--n", "2", "--d", "3", "--m", "2", "--seed", "1")
    _, b, _ = run(capsys, "sample", "--n", "2", "--d", "3", "--m", "2", "--seed", "2")
    assert a != b


def test_sweep_slope(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "2,4,8", "--d", "10000", "--no-mc")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "n,d,p,m,q,estimate,stderr,rhs_theorem,rhs_sharper,seed"
    fit = [line for line in lines if "slope_fit column=rhs_theorem axis=n" in line][0]
    slope = float(fit.split("slope=")[1].split()[0])
    assert slope == pytest.approx(1.5, abs=1e-6)


def test_sweep_append(tmp_path):
    out = tmp_path / "s.csv"
    args = ["sweep", "--n", "2", "--d", "100", "--no-mc", "--out", str(out)]
    main(args)
    first = out.read_text()
    main(args + ["--append"])
    assert out.read_text() == first * 2


def test_distance_json(capsys):
    code, out, _ = run(capsys, "distance", "--n", "2", "--d", "50", "--m", "500", "--n-proj", "16")
    rec = json.loads(out)
    assert code == 0 and rec["m"] == 500 and rec["q"] == 16
    assert rec["metric"] == "half-vector Euclidean"
    assert 0 < rec["estimate"] <= rec["rhs_sharper"]


def test_mc_var_p2(capsys):
    code, out, _ = run(capsys, "mc-var", "--p", "2", "--d", "5", "--j", "1,1", "--m", "50000", "--seed", "3")
    assert code == 0
    rows = [line.split(",") for line in out.splitlines() if not line.startswith(("#", "mode"))]
    assert [r[0] for r in rows] == ["factorial", "linear"]
    for r in rows:
        assert float(r[1]) == pytest.approx(8 / 5, rel=1e-12)
        assert r[5] == "true"


def test_mc_var_bad_tuple(capsys):
    code, _, _ = run(capsys, "mc-var", "--p", "3", "--d", "2", "--j", "1,2")
    assert code == 64


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bound settings\nn = 2\nd = 100\nr = delta\n")
    code, out, _ = run(capsys, "bound", "--config", str(cfg))
    assert code == 0 and json.loads(out)["rhs_theorem"] == pytest.approx(1.6)
    # explicit flags override the file
    code, out, _ = run(capsys, "bound", "--config", str(cfg), "--d", "400")
    assert json.loads(out)["rhs_theorem"] == pytest.approx(0.8)
    cfg.write_text("n 2\n")
    assert run(capsys, "bound", "--config", str(cfg))[0] == 64
    assert run(capsys, "bound", "--config", str(tmp_path / "missing"))[0] == 64


def test_float_format():
    assert io.fmt(0.1) == "0.10000000000000001"
    assert float(io.fmt(1 / 3)) == 1 / 3
    assert io.dumps({"a": math.nan, "b": 1.5, "c": True}, indent=None) == '{"a": null, "b": 1.5, "c": true}'
