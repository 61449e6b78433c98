import json
import subprocess
import sys

import numpy as np
import pytest

from nonlocal_ivp.cli import main
from nonlocal_ivp.config import build_problem, parse_config
from nonlocal_ivp.errors import ConfigError


def _doc(**problem):
    base = {"t0": 1.0, "t_max": 2.0, "grid": {"h": 0.001}}
    base.update(problem)
    return {"version": 1, "problem": base}


EX35 = _doc(truncation={"N": 16}, rhs={"kind": "builtin", "name": "example35", "params": {"k": 0.5}},
            seminorms={"P": 3})
EX35_DSL = _doc(
    truncation={"N": 16, "closure": "zero"},
    rhs={"kind": "dsl", "source": "k[n]/(1+t^2)*x[n] + t*cos(x[n+1])", "params": {"k": 0.5}},
    functionals={"generator": {"density": {"pieces": [{"from": 0, "to": "t0", "coeffs": ["1/(n+t0)"]}]}}},
    envelopes={"A": "bracket(k, p)/(1+t^2)", "B": "t0", "C": "bracket(k, p) + tp"},
    seminorms={"P": 3},
)
CONST = _doc(rhs={"kind": "dsl", "source": ["1"]},
             functionals=[{"point_masses": [{"t": 0.5, "w": 0.5}]}],
             envelopes={"A": 0, "B": 1, "C": 1})
ZERO = _doc(rhs={"kind": "dsl", "source": ["0"]}, functionals=[{"point_masses": [{"t": 0.5, "w": 0.5}]}])
UNCOUPLED = _doc(truncation={"N": 4}, rhs={"kind": "builtin", "name": "uncoupled_exp"})


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return _write


def _read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_check_example_pass(write, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["check", write(EX35), "--json", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["overall"] and report["hyp_2_5_pass"]
    assert len(report["records"]) == 3
    for r in report["records"]:
        assert r["pass"] and abs(r["lhs"] - 0.7854) < 1e-4
    assert report["sampling"]["n_violations"] == 0
    assert "lhs" in capsys.readouterr().out


def test_check_dsl_matches_builtin(write, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["check", write(EX35), "--json", str(a), "--samples", "0"]) == 0
    assert main(["check", write(EX35_DSL, "dsl.json"), "--json", str(b), "--samples", "0"]) == 0
    assert json.loads(a.read_text()) == json.loads(b.read_text())


def test_check_example_fail(write):
    doc = json.loads(json.dumps(EX35))
    doc["problem"]["rhs"]["params"]["k"] = 0.7
    assert main(["check", write(doc)]) == 1


def test_check_p_max(write, tmp_path):
    out = tmp_path / "r.json"
    assert main(["check", write(EX35), "--p-max", "8", "--json", str(out), "--samples", "0"]) == 0
    records = json.loads(out.read_text())["records"]
    assert [r["n_p"] for r in records] == list(range(1, 9))


def test_check_degenerate_condition(write, capsys):
    doc = json.loads(json.dumps(CONST))
    doc["problem"]["functionals"][0]["point_masses"][0]["w"] = 1.0
    assert main(["check", write(doc)]) == 1
    assert "<eta_1, 1> = 1" in capsys.readouterr().err


def test_check_degenerate_generator(write, capsys):
    doc = json.loads(json.dumps(EX35_DSL))
    doc["problem"]["functionals"] = {"list": [{"point_masses": [{"t": 1.0, "w": 1.0}]}],
                                     "generator": {"point_masses": [{"t": "t0", "w": 0.5}]}}
    assert main(["check", write(doc)]) == 1
    assert "alpha_1" in capsys.readouterr().err


@pytest.mark.parametrize("mutate, field", [
    (lambda p: p.update(gird=p.pop("grid")), "problem.gird"),
    (lambda p: p["grid"].update(step=0.1), "problem.grid.step"),
    (lambda p: p["rhs"].update(parms={}), "problem.rhs.parms"),
    (lambda p: p["seminorms"].update(thetas=1), "problem.seminorms.thetas"),
    (lambda p: p["grid"].update(h=-1.0), "problem.grid.h"),
    (lambda p: p.update(t_max=0.5), "problem.t0"),
    (lambda p: p["truncation"].update(closure="mirror"), "problem.truncation.closure"),
])
def test_strict_schema(write, capsys, mutate, field):
    doc = json.loads(json.dumps(EX35))
    mutate(doc["problem"])
    assert main(["check", write(doc)]) == 3
    assert field in capsys.readouterr().err


def test_top_level_key_rejected(write):
    doc = dict(EX35, extra=True)
    assert main(["solve", write(doc)]) == 3


def test_non_finite_rejected():
    doc = json.loads(json.dumps(EX35))
    doc["problem"]["t_max"] = float("nan")
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_bad_expression(write, capsys):
    doc = json.loads(json.dumps(EX35_DSL))
    doc["problem"]["rhs"]["source"] = "cos("
    assert main(["solve", write(doc)]) == 3
    assert "problem.rhs.source" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["check", str(tmp_path / "nope.json")]) == 3


def test_usage_error_is_config_error(write):
    with pytest.raises(SystemExit) as info:
        main(["solve", write(EX35), "--method", "newton"])
    assert info.value.code == 3


def test_solve_constant_oracle(write, tmp_path):
    out, rep = tmp_path / "x.csv", tmp_path / "r.json"
    assert main(["solve", write(CONST), "--out", str(out), "--report", str(rep)]) == 0
    header, data = _read_csv(out)
    assert header == ["t", "x_1"]
    row = data[np.flatnonzero(data[:, 0] == 1.0)[0]]
    assert abs(row[1] - 1.5) <= 1e-9
    report = json.loads(rep.read_text())
    assert set(report) == {"method", "iterations", "final_residual", "nonlocal_residuals", "seminorms"}
    assert set(report["seminorms"][0]) == {"p", "P", "Q", "R", "rho"}


def test_solve_zero(write, tmp_path):
    out, rep = tmp_path / "x.csv", tmp_path / "r.json"
    assert main(["solve", write(ZERO), "--out", str(out), "--report", str(rep)]) == 0
    _, data = _read_csv(out)
    assert not data[:, 1:].any()
    assert 1 <= json.loads(rep.read_text())["iterations"] <= 2


def test_solve_methods_agree(write, tmp_path):
    path = write(EX35)
    a, b = tmp_path / "p.csv", tmp_path / "s.csv"
    assert main(["solve", path, "--method", "picard", "--out", str(a)]) == 0
    assert main(["solve", path, "--method", "shoot", "--out", str(b)]) == 0
    ha, xa = _read_csv(a)
    hb, xb = _read_csv(b)
    assert ha == hb == ["t"] + [f"x_{i}" for i in range(1, 17)]
    assert np.max(np.abs(xa - xb)) <= 1e-6


def test_solve_deterministic(write, tmp_path):
    path = write(EX35)
    outputs = []
    for i in range(2):
        out, rep = tmp_path / f"x{i}.csv", tmp_path / f"r{i}.json"
        assert main(["solve", path, "--out", str(out), "--report", str(rep)]) == 0
        outputs.append((out.read_bytes(), rep.read_bytes()))
    assert outputs[0] == outputs[1]


def test_csv_seventeen_digits(write, tmp_path):
    out = tmp_path / "x.csv"
    main(["solve", write(EX35), "--out", str(out)])
    lines = out.read_text().splitlines()
    for cell in lines[500].split(","):
        assert float(repr(float(cell))) == float(cell)
        assert cell == format(float(cell), ".17g")


def test_solve_non_convergence(write, capsys):
    assert main(["solve", write(EX35), "--max-iter", "2"]) == 2
    assert "no convergence" in capsys.readouterr().err


def test_solve_evaluation_error(write, capsys):
    doc = json.loads(json.dumps(CONST))
    doc["problem"]["rhs"]["source"] = ["1/(t-1.5)"]
    assert main(["solve", write(doc)]) == 2
    assert "t=1.5" in capsys.readouterr().err


def test_solve_hypothesis_violation(write):
    doc = json.loads(json.dumps(CONST))
    doc["problem"]["functionals"][0]["point_masses"][0]["w"] = 1.0
    assert main(["solve", write(doc)]) == 1


def test_study_example(write, tmp_path):
    out = tmp_path / "study.csv"
    assert main(["study", write(EX35), "--truncations", "4,8,16,32", "--out", str(out)]) == 0
    rows = [line.split(",") for line in out.read_text().splitlines()]
    assert rows[0] == ["N", "d", "iterations", "status"]
    d = [float(r[1]) for r in rows[1:] if r[1]]
    assert len(d) == 3
    assert all(b <= a for a, b in zip(d, d[1:]))
    assert d[-1] <= 1e-6


def test_study_uncoupled(write, tmp_path):
    out = tmp_path / "study.csv"
    assert main(["study", write(UNCOUPLED), "--truncations", "2,4,8", "--out", str(out)]) == 0
    d = [r.split(",")[1] for r in out.read_text().splitlines()[1:]]
    assert d == ["0", "0", ""]


def test_study_single(write, tmp_path):
    out = tmp_path / "study.csv"
    assert main(["study", write(UNCOUPLED), "--truncations", "8", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1].split(",")[1] == ""


def test_study_bad_list(write):
    assert main(["study", write(UNCOUPLED), "--truncations", "8,4"]) == 3
    assert main(["study", write(UNCOUPLED), "--truncations", "a,b"]) == 3


def test_seminorm_rules(tmp_path):
    doc = json.loads(json.dumps(EX35))
    doc["problem"]["seminorms"] = {"P": 4, "n_seq": "2*p", "t_seq": "t0 + p*(t_max - t0)/P", "theta": 3.0}
    spec = build_problem(doc)
    assert spec.seminorm_config.n_seq == (2, 4, 6, 8)
    assert spec.seminorm_config.t_seq[-1] == 2.0
    assert spec.seminorm_config.theta == (3.0,) * 4


def test_builtin_override_envelope():
    doc = json.loads(json.dumps(EX35))
    doc["problem"]["envelopes"] = {"A": "0.1", "B": 1, "C": 1}
    spec = build_problem(doc)
    from nonlocal_ivp.hypotheses import check_inequality
    assert abs(check_inequality(spec, 1)[0] - 0.2) < 1e-14


def test_module_entry_point(write):
    proc = subprocess.run([sys.executable, "-m", "nonlocal_ivp", "check", write(CONST), "--samples", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
