import json
import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from soliton import cli, germ


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


P1_FILE = {"schema_version": 1, "label": "P1", "dim": 1,
           "facets": [{"normal": [1], "discrepancy": "1/1"}, {"normal": [-1], "discrepancy": "1"}]}


def test_minimize_fixtures(capsys, tmp_path):
    code, out, _ = run(capsys, "minimize", write_json(tmp_path, "p1.json", P1_FILE))
    assert code == 0
    rec = json.loads(out)
    assert rec["command"] == "minimize"
    assert abs(rec["outputs"]["xi0"][0]) <= 1e-8
    assert rec["diagnostics"]["tolerance"] == 1e-8
    code, out, _ = run(capsys, "minimize", "fixture:F1")
    assert code == 0 and json.loads(out)["outputs"]["gradient_norm"] <= 1e-8


def test_malformed_facet_names_it(capsys, tmp_path):
    bad = dict(P1_FILE, facets=[{"normal": [1], "discrepancy": "1"}, {"normal": [-1], "discrepancy": "0"}])
    code, out, err = run(capsys, "minimize", write_json(tmp_path, "bad.json", bad))
    assert code == 2
    rec = json.loads(out)
    assert rec["error"]["facet"] == 1
    assert "facet 1" in rec["error"]["message"] and "facet 1" in err


def test_unparseable_rational_is_spec_error(capsys, tmp_path):
    bad = dict(P1_FILE, facets=[{"normal": [1], "discrepancy": "1/0"}, {"normal": [-1], "discrepancy": "1"}])
    code, _, _ = run(capsys, "minimize", write_json(tmp_path, "bad.json", bad))
    assert code == 2


def test_schema_round_trip():
    for name in ("P1", "P2", "F1", "A2"):
        spec, cutoff, _ = cli.load_spec(f"fixture:{name}")
        again, cutoff2 = cli.spec_from_dict(json.loads(cli.dumps(cli.spec_to_dict(spec, cutoff))))
        assert again.facets == spec.facets and cutoff2 == cutoff


def test_determinism_byte_identical(capsys):
    outs = [run(capsys, "minimize", "fixture:F1")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    outs = [run(capsys, "delta", "fixture:P2", "--seed", "3")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    digest = json.loads(outs[0])["inputs_digest"]
    assert len(digest) == 64


def test_floats_have_17_digits():
    assert cli.dumps({"x": 0.1}) == '{"x": 0.10000000000000001}'
    assert cli.dumps({"q": Fraction(3, 4), "z": Fraction(0)}) == '{"q": "3/4", "z": "0"}'


def _csv(out):
    lines = out.strip().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_h_curve_p1_oracle(capsys):
    code, out, _ = run(capsys, "h-curve", "fixture:P1", "--direction", "1", "--t-range", "-2", "2", "--points", "41")
    assert code == 0
    header, rows = _csv(out)
    assert header == "t,h"
    ts = np.array([float(r[0]) for r in rows])
    hs = np.array([float(r[1]) for r in rows])
    assert len(rows) == 41
    ref = [math.log(2.0) if abs(t) < 1e-12 else math.log(2 * math.sinh(t) / t) for t in ts]
    np.testing.assert_allclose(hs, ref, rtol=1e-10, atol=1e-10)
    assert np.argmin(hs) == 20
    np.testing.assert_allclose(hs, hs[::-1], atol=1e-12)
    assert np.all(np.diff(hs, 2) > 0)


def test_h_curve_zero_direction_and_a2(capsys):
    code, out, _ = run(capsys, "h-curve", "fixture:F1", "--direction", "0,0", "--points", "5")
    assert code == 0
    assert len({r[1] for r in _csv(out)[1]}) == 1
    code, out, _ = run(capsys, "h-curve", "fixture:A2", "--direction", "1,1", "--t-range", "-0.5", "0.5",
                       "--points", "21")
    hs = [float(r[1]) for r in _csv(out)[1]]
    assert code == 0 and hs.index(min(hs)) == 10


def test_h_curve_reeb_violation(capsys):
    code, out, _ = run(capsys, "h-curve", "fixture:A2", "--direction", "1,1", "--t-range", "-2", "0")
    assert code == 4
    assert json.loads(out)["error"]["type"] == "ReebViolation"


def test_dh_p1_gaps_decrease(capsys, tmp_path):
    atoms = tmp_path / "atoms.json"
    code, out, _ = run(capsys, "dh", "fixture:P1", "--xi", "1", "--m", "2", "4", "8", "--limit",
                       "--atoms", str(atoms))
    assert code == 0
    header, rows = _csv(out)
    assert header == "m,t,cdf"
    assert {r[0] for r in rows} == {"2", "4", "8", "limit"}
    gaps = json.loads(atoms.read_text())["outputs"]["sup_gaps"]
    assert gaps["2"] > gaps["4"] > gaps["8"]


def test_dh_trivial_is_a_step(capsys, tmp_path):
    code, out, _ = run(capsys, "dh", "fixture:P2", "--m", "2", "--points", "5")
    assert code == 0
    cdf = [float(r[2]) for r in _csv(out)[1] if r[0] == "2"]
    # one atom at 0 carrying n! dim / m^n = 2 * 28 / 4
    assert cdf == [14.0] * 5


def test_dh_a2_limit_is_t_squared(capsys):
    code, out, _ = run(capsys, "dh", "fixture:A2", "--xi", "1,1", "--limit", "--t-max", "2", "--points", "9")
    assert code == 0
    for _, t, c in _csv(out)[1]:
        assert float(c) == pytest.approx(float(t) ** 2, rel=1e-14, abs=1e-15)
    code, _, _ = run(capsys, "dh", "fixture:A2", "--xi", "1,1", "--limit")
    assert code == 2


def test_dh_gap_is_exact_and_decays():
    v = cli._valuation(germ.projective_line(), [1])
    assert cli.dh_gap(v, 1, None) == 1
    assert cli.dh_gap(v, 2, None) == Fraction(1, 2)


def _pipeline(tmp_path, steps, filtrations=None, lvl=None):
    doc = {
        "level": lvl or {"germ": "fixture:A2", "m": 2, "cutoff": "2", "xi_ref": ["1", "1"]},
        "filtrations": filtrations or {"F0": {"kind": "wt", "xi": ["2", "1"]},
                                       "F1": {"kind": "wt", "xi": ["1", "2"]}},
        "pipeline": steps,
    }
    return write_json(tmp_path, "pipe.json", doc)


def test_pipeline_identity_and_geodesic(capsys, tmp_path):
    path = _pipeline(tmp_path, [
        {"op": "identity", "input": "F0"},
        {"op": "geodesic", "inputs": ["F0", "F1"], "t": "1/2", "as": "G"},
        {"op": "geodesic_dh", "inputs": ["F0", "F1"], "t": "1/2"},
        {"op": "measure", "input": "G"},
        {"op": "s_tilde", "input": "G", "mu": "3"},
    ])
    code, out, _ = run(capsys, "filtration", path)
    assert code == 0
    steps = json.loads(out)["outputs"]["steps"]
    assert steps[0]["successive_minima"][0] == ["0", 1]
    # (3/2)(gamma_1 + gamma_2) on the shifted lattice beta = (-2, -2) + gamma
    assert [s[0] for s in steps[1]["successive_minima"]] == ["0", "3/2", "3", "9/2"]
    assert steps[2]["deviation"] == "0" and steps[2]["holds"] is True
    assert math.isfinite(steps[4]["h_m"])


def test_pipeline_twist_of_flag_is_exit_5(capsys, tmp_path):
    flags = {"F": {"kind": "flag", "jumps": [
        {"lambda": "0", "generators": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]},
        {"lambda": "2", "generators": [[1, 1, 0]]},
    ]}}
    path = _pipeline(tmp_path, [{"op": "twist", "input": "F", "xi": ["1"]}], flags,
                     {"germ": "fixture:P1", "m": 1})
    code, out, _ = run(capsys, "filtration", path)
    assert code == 5
    assert json.loads(out)["error"]["type"] == "NotEquivariant"


def test_pipeline_unknown_op_is_exit_5(capsys, tmp_path):
    code, _, _ = run(capsys, "filtration", _pipeline(tmp_path, [{"op": "frobnicate", "input": "F0"}]))
    assert code == 5


def test_okounkov_slope_delta(capsys):
    code, out, _ = run(capsys, "okounkov", "fixture:P1", "--xi", "1")
    assert code == 0
    assert json.loads(out)["outputs"]["transform"] == {"slope": ["1"], "constant": "0"}
    code, out, _ = run(capsys, "slope", "--xi", "2,3")
    rec = json.loads(out)
    assert code == 0 and abs(rec["outputs"]["mu"] - 5) <= 1e-6
    code, out, _ = run(capsys, "delta", "fixture:F1")
    assert code == 0 and abs(json.loads(out)["outputs"]["delta"] - 1) <= 1e-4


def test_verify_quick_and_unknown(capsys):
    code, out, _ = run(capsys, "verify", "gradients", "--quick")
    rec = json.loads(out)
    assert code == 0
    assert all(c["passed"] for c in rec["outputs"]["checks"])
    with pytest.raises(SystemExit) as err:
        cli.main(["verify", "nonsense"])
    assert err.value.code == 2


def test_out_file(capsys, tmp_path):
    target = tmp_path / "res.json"
    code, out, _ = run(capsys, "--out", str(target), "minimize", "fixture:P2")
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["outputs"]["h_value"] == pytest.approx(math.log(9), rel=1e-12)


def test_threads_env_validation(capsys, monkeypatch):
    monkeypatch.setenv("SOLITON_THREADS", "zero")
    code, _, _ = run(capsys, "minimize", "fixture:P1")
    assert code == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "soliton.cli", "minimize", "fixture:P1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "minimize"
