import json
import math
import os
import subprocess
import sys
from fractions import Fraction

import pytest

from confsym.cli import COMMANDS, RunConfig, build_parser, main, parse_value, resolve_config, run


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip().startswith("{") else out), err


def test_parse_value():
    assert parse_value("3") == 3 and parse_value("-2") == -2
    assert parse_value("3/2") == Fraction(3, 2)
    assert parse_value("0.25") == 0.25
    assert parse_value("true") is True and parse_value("False") is False
    assert parse_value("1,2/3,x") == [1, Fraction(2, 3), "x"]
    assert parse_value("laplace") == "laplace"


def test_config_round_trip():
    cfg = RunConfig("zeta", {"op": "yamabe", "n": 4, "s": [Fraction(5, 2), 3.5], "fit": True},
                    seed=7, threads=2, exact=True, out="r.json", csv=None)
    again = RunConfig.loads(cfg.dumps())
    assert again == cfg
    assert RunConfig.loads(again.dumps()).dumps() == cfg.dumps()


def test_precedence(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"command": "spectrum", "parameters": {"op": "laplace", "n": 3, "K_max": 2},
                                "seed": 5, "threads": 3}))
    args = build_parser().parse_intermixed_args(["--config", str(path), "n=2", "--seed", "9"])
    cfg = resolve_config(args)
    assert cfg.command == "spectrum" and cfg.parameters == {"op": "laplace", "n": 2, "K_max": 2}
    assert cfg.seed == 9 and cfg.threads == 3 and cfg.exact is False
    args = build_parser().parse_intermixed_args(["spectrum", "n=2", "scale=0.5", "--exact"])
    assert resolve_config(args).parameters["scale"] == Fraction(1, 2)


def test_dump_config(capsys):
    code, out, _ = call(capsys, "spectrum", "n=2", "--seed", "4", "--dump-config")
    assert code == 0 and out["seed"] == 4 and out["parameters"] == {"n": 2}


def test_spectrum(capsys, tmp_path):
    csv = tmp_path / "s.csv"
    code, rep, _ = call(capsys, "spectrum", "op=laplace", "n=2", "K_max=2", "--csv", str(csv), "--exact")
    assert code == 0 and rep["status"] == "ok"
    assert [(l["k"], l["eig"], l["mult"]) for l in rep["lines"]] == [(0, "0", 1), (1, "2", 3), (2, "6", 5)]
    assert csv.read_text().splitlines()[1:] == ["0,0,1", "1,2,3", "2,6,5"]
    code, rep, _ = call(capsys, "spectrum", "op=gjms", "n=4", "r=2", "K_max=3")
    assert [l["eig"] for l in rep["lines"]] == ["0", "24", "120", "360"]


def test_zeta_and_heat_fit(capsys):
    code, rep, _ = call(capsys, "zeta", "op=yamabe", "n=4")
    assert code == 0 and rep["zeta0"] == "-1/90"
    code, rep, _ = call(capsys, "zeta", "op=laplace", "n=2", "s=2,3")
    assert code == 0 and rep["kernel_dim"] == 1
    assert rep["det"] == pytest.approx(math.exp(0.5 - 4 * -0.16542114370045092), rel=1e-10)
    code, rep, _ = call(capsys, "heat-fit", "op=laplace", "n=2")
    coeff = {c["power"]: c["value"] for c in rep["coefficients"]}
    assert code == 0 and abs(coeff["-1"] - 1) <= 1e-6 and abs(coeff["0"] - 1 / 3) <= 1e-6


@pytest.mark.parametrize("name, args, expected", [
    ("sphere_volume", ["n=2"], 4 * math.pi),
    ("harmonic_dim", ["p=4", "k=2"], 9),
    ("laplace_eigenvalue", ["n=3", "k=2"], 8),
    ("yamabe_eigenvalue", ["n=4", "k=1"], 6),
    ("gjms_eigenvalue", ["n=4", "r=2", "k=1"], 24),
    ("knapp_stein_gamma", ["n=2", "p=3/2", "k=0"], 1),
    ("round_sphere_curvature", ["n=2"], [2, 2, 4, 0]),
    ("cone_measure_weight", ["p=3", "q=3", "r=2"], 1.0),
    ("log_gamma", ["x=1"], 0.0),
    ("gamma_ratio", ["a=5", "b=3"], 12.0),
])
def test_invariants(capsys, name, args, expected):
    code, rep, _ = call(capsys, "invariants", f"name={name}", *args)
    assert code == 0, rep
    got = rep["value"]
    if isinstance(expected, float):
        assert got == pytest.approx(expected, rel=1e-13)
    elif isinstance(expected, list):
        assert [Fraction(v) if isinstance(v, str) else v for v in got] == expected
    else:
        assert str(got) == str(expected)


def test_invariants_registry_runs(capsys):
    cases = {"bessel_k": ["nu=0.5", "x=1"], "quadrature": ["n=2", "L=4"], "constant_coefficient": ["n=2", "L=3"],
             "linear_energy": ["n=2", "L=3"], "round_trip": ["n=2", "L=4"], "conformal_fields": ["n=2"],
             "mobius_identity": ["n=3"], "hls_constant": ["n=2", "p=3/2"], "log_sobolev_coeff": ["n=2", "k=1"],
             "universal_hessian_eigenvalue": ["n=4", "j=1", "q=1"], "helmholtz_numbers": ["n=4"],
             "gjms_factorization_poly": ["n=4"], "heat_invariant_U": ["i=1", "n=4"],
             "integrated_heat_invariant": ["i=2", "n=4"], "heat_trace": ["op=laplace", "n=2", "t=0.5"],
             "bessel_ktype_v0": ["p=3", "q=3", "r=1"], "parabolic_embedding": ["zp=1,2", "zpp=3"]}
    for name, args in cases.items():
        code, rep, err = call(capsys, "invariants", f"name={name}", *args)
        assert code == 0, (name, err)
    code, rep, _ = call(capsys, "invariants", "name=parabolic_embedding", "zp=1/2,2", "zpp=3")
    assert Fraction(rep["value"]["null_defect"]) == 0
    code, rep, _ = call(capsys, "invariants", "name=integrated_heat_invariant", "i=2", "n=4")
    assert float(Fraction(str(rep["value"]))) == pytest.approx(-1 / 90, rel=1e-12)


@pytest.mark.parametrize("args", [
    ["kind=onofri_endpoint", "input=constant"], ["kind=onofri_endpoint", "input=mobius"],
    ["kind=log_sobolev"], ["kind=hls_spectral", "p=1.5"], ["kind=S1", "n=4"], ["kind=beckner", "n=4"],
    ["kind=polyakov"], ["kind=gauss_bonnet"], ["kind=covariance", "n=4"], ["kind=pohozaev"],
    ["kind=variation", "n=4"]])
def test_functional(capsys, args):
    code, rep, err = call(capsys, "functional", *args)
    assert code == 0, err
    assert rep["iterations"] == 0
    values = rep["value"].values() if isinstance(rep["value"], dict) else [rep["value"]]
    assert all(math.isfinite(v) for v in values)


def test_functional_values(capsys):
    _, rep, _ = call(capsys, "functional", "kind=onofri_endpoint", "input=mobius", "rapidity=0.4")
    assert abs(rep["value"]) <= 1e-6
    _, rep, _ = call(capsys, "functional", "kind=gauss_bonnet", "input=random")
    assert rep["value"] == pytest.approx(4 * math.pi, abs=1e-7)


def test_optimize(capsys, tmp_path):
    csv = tmp_path / "t.csv"
    code, rep, _ = call(capsys, "optimize", "kind=onofri_endpoint", "scale=0.1", "--csv", str(csv), "--seed", "2")
    assert code == 0 and rep["value"] <= 1e-5
    assert rep["trajectory"]["length"] == len(csv.read_text().splitlines()) - 1


def test_branch(capsys, tmp_path):
    csv = tmp_path / "b.csv"
    code, rep, _ = call(capsys, "branch", "p=4", "q=4", "q1=2", "q2=2", "cutoff=12", "--csv", str(csv))
    assert code == 0 and rep["equal"] is True and rep["lhs_count"] == rep["rhs_count"]
    assert "first_mismatch" not in rep
    assert csv.read_text().splitlines()[0] == "m,b1,b2,mult"
    code, rep, _ = call(capsys, "branch", "p=6", "q=4", "q1=3", "q2=1", "cutoff=10")
    assert rep["contributing_l"] == [0, 1]
    code, rep, _ = call(capsys, "branch", "kind=minrep", "p=4", "q=6", "cutoff=3")
    assert rep["ktypes"] == [[1, 0], [2, 1], [3, 2]]
    code, rep, _ = call(capsys, "branch", "kind=harmonic", "q1=2", "q2=2", "b=2")
    assert rep["dimension_gap"] == 0 and len(rep["pairs"]) == 4
    code, rep, _ = call(capsys, "branch", "kind=elliptic", "p=4", "q=2", "lam=0", "cutoff=4")
    assert rep["b"] == 0 and rep["discrete_series"] is False


def test_discrete_spectrum(capsys):
    code, rep, _ = call(capsys, "discrete-spectrum", "p1=3", "q1=2", "p2=2", "q2=3", "lam_max=5")
    assert code == 0
    assert [e["lambda"] for e in rep["params"] if e["orientation"] == "+-"] == ["3/2", "5/2", "7/2", "9/2"]


def test_cone(capsys):
    code, rep, _ = call(capsys, "cone", "p=3", "q=3")
    assert code == 0 and rep["radial_integral"] == pytest.approx(1 / 32, rel=1e-10)
    assert rep["min_order"] >= 1.9
    code, rep, _ = call(capsys, "cone", "p=3", "q=3", "min_order=2.5")
    assert code == 2 and rep["status"] == "verification_failed"


def test_exit_codes(capsys, monkeypatch, tmp_path):
    assert call(capsys, "branch", "p=4", "q=5", "q1=2", "q2=3")[0] == 1
    assert call(capsys, "spectrum", "n=2", "bogus=1")[0] == 1
    assert call(capsys, "spectrum")[0] == 1
    assert call(capsys, "nonsense")[0] == 1
    assert call(capsys, "--config", str(tmp_path / "missing.json"))[0] == 1
    assert call(capsys, "spectrum", "n=2", "--threads", "0")[0] == 1
    code, rep, err = call(capsys, "invariants", "name=nothing")
    assert code == 1 and rep["status"] == "usage_error" and err
    # a failing branching verification maps to exit 2
    import confsym.minrep_branching as mb
    monkeypatch.setattr(mb, "plancherel_weight", lambda q2, l: Fraction(l) + Fraction(q2, 2))
    code, rep, _ = call(capsys, "branch", "p=4", "q=6", "q1=3", "q2=3")
    assert code == 2 and rep["equal"] is False and "first_mismatch" in rep
    code, rep, _ = call(capsys, "optimize", "kind=onofri_endpoint", "L=3", "scale=1.0", "max_iter=1", "tol=1e-14")
    assert code == 2


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["spectrum", "n=3", "K_max=1", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["lines"][1]["eig"] == "3"


def test_run_deterministic():
    cfg = RunConfig("functional", {"kind": "onofri_endpoint"}, seed=11)
    assert run(cfg) == run(cfg)


def test_every_command_covered():
    tested = {"spectrum", "zeta", "heat-fit", "invariants", "functional", "optimize", "branch",
              "discrete-spectrum", "cone"}
    assert tested == set(COMMANDS)


def test_subprocess_byte_identical(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "optimize", "parameters": {"kind": "onofri_endpoint", "scale": 0.1},
                               "seed": 3, "threads": 1}))
    env = dict(os.environ)
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        res = subprocess.run([sys.executable, "-m", "confsym", "--config", str(cfg), "--out", str(path)],
                             env=env, capture_output=True)
        assert res.returncode == 0, res.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
