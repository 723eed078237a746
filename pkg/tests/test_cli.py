import json
import math
import subprocess
import sys

import pytest

from thermocert.cli import ConfigError, RunConfig, parse_config_text, run


def records(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh]


@pytest.mark.parametrize("argv", [
    ["pressure", "bogus=1"],
    ["pressure", "n=abc"],
    ["pressure", "system=torus"],
    ["pressure", "system=circle", "potential=first-symbol"],
    ["pressure", "system=quadratic", "potential=cosine"],
    ["pressure", "--n", "0"],
    ["pressure", "--n", "61"],
    ["pressure", "system=sft", "adjacency=12;10"],
    ["pressure", "system=sft", "adjacency=11;00"],
    ["pressure", "potential=constant", "value=1/0"],
    ["pressure", "system=shift", "potential=first-symbol", "symbol=5"],
    ["pressure", "notkeyvalue"],
    ["dimension", "system=circle"],
    ["frobnicate"],
])
def test_bad_config_exits_2(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().out == ""


def test_quadratic_certified_pressure_is_infeasible():
    assert run(["pressure", "system=quadratic", "potential=geometric"]) == 3


def test_missing_config_file(tmp_path):
    assert run(["pressure", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bernoulli\nsystem = shift\npotential = first-symbol\nbeta = 1\nn = 4\n")
    out = tmp_path / "p.jsonl"
    # trailing key=value beats the file, --n beats both
    assert run(["pressure", "--config", str(cfg), "beta=0", "--n", "6", "--out", str(out)]) == 0
    (rec,) = records(out)
    assert rec["n"] == 6 and rec["potential"] == "first-symbol(0)"
    lo, hi = float(rec["lower"]), float(rec["upper"])
    assert lo <= math.log(2) <= hi
    assert float(rec["radius"]) <= 2 ** -6


def test_parse_config_text():
    c = parse_config_text("system = sft\nadjacency = 11;10  # golden\nallow-fallback = yes\n")
    assert c.system == "sft" and c.adjacency == "11;10" and c.allow_fallback is True
    with pytest.raises(ConfigError):
        parse_config_text("just words")
    with pytest.raises(ConfigError):
        parse_config_text("allow_fallback = maybe")
    assert RunConfig().validate().n == 10


def test_stdout_output(capsys):
    assert run(["pressure", "system=shift", "potential=first-symbol", "beta=0", "--n", "4"]) == 0
    rec = json.loads(capsys.readouterr().out.strip())
    assert rec["command"] == "pressure" and rec["mode"] == "certified"


def test_empirical_flag(tmp_path):
    out = tmp_path / "e.jsonl"
    assert run(["eigenfunction", "system=circle", "potential=cosine", "--mode", "empirical",
                "--n", "6", "--out", str(out)]) == 0
    head, *rows = records(out)
    assert head["heuristic"] and head["points"] == len(rows)
    assert all(float(r["u"]) > 0 for r in rows)


def test_certified_fallback(tmp_path):
    argv = ["eigenfunction", "system=circle", "potential=cosine", "--n", "6"]
    assert run(argv) == 3
    out = tmp_path / "f.jsonl"
    assert run(argv + ["--allow-fallback", "--out", str(out)]) == 0
    assert records(out)[0]["mode"] == "empirical"


def test_dimension_writes_curve(tmp_path):
    out = tmp_path / "dim.jsonl"
    assert run(["dimension", "system=quadratic", "potential=geometric", "--mode", "empirical",
                "--out", str(out)]) == 0
    (rec,) = records(out)
    assert abs(float(rec["value"]) - 1) <= 1e-3
    assert rec["curve"] == "dim.csv"
    lines = (tmp_path / "dim.csv").read_text().splitlines()
    assert lines[0] == "t,pressure" and len(lines) > 2


def test_measure_and_constants(tmp_path):
    out = tmp_path / "m.jsonl"
    assert run(["measure", "system=shift", "potential=first-symbol", "beta=1", "--n", "4",
                "--out", str(out)]) == 0
    recs = records(out)
    assert recs[1]["derived"] == "entropy"
    atoms = [r for r in recs if "w" in r]
    assert sum(float(r["w"]) for r in atoms) == pytest.approx(1, abs=1e-9)
    out = tmp_path / "c.jsonl"
    assert run(["constants", "system=circle", "potential=cosine", "--out", str(out)]) == 0
    names = {r.get("name") for r in records(out)}
    assert {"Cbar", "Zbar", "k"} <= names


def test_verify_passes(tmp_path):
    out = tmp_path / "v.jsonl"
    assert run(["verify", "system=shift", "potential=first-symbol", "beta=1/2", "--n", "6",
                "--out", str(out)]) == 0
    recs = records(out)
    assert recs[-1]["summary"]["failed"] == 0
    assert all(r["ok"] for r in recs if "check" in r)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "thermocert", "pressure", "system=shift",
                           "potential=first-symbol", "beta=1", "--n", "4"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    rec = json.loads(proc.stdout)
    assert float(rec["lower"]) <= math.log1p(math.e) <= float(rec["upper"])
