"""Golden-file and exit-code tests for the command-line front end.

Regenerate inputs and goldens with ``python3 tests/test_cli.py --regen``.
"""

import io
import json
import os
import subprocess
import sys
from contextlib import redirect_stdout

import pytest

from floerkit import catalog
from floerkit.cli import COMMANDS, main

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "data")
GOLDEN = os.path.join(HERE, "golden")

# (command, built-in input or None, extra flags, expected exit code)
CASES = [
    ("ring-axioms", None, ["--trials", "50", "--seed", "3"], 0),
    ("check-ainf", "pq", [], 0),
    ("check-ainf", "m3", ["--max-arity", "4"], 0),
    ("check-hom", "identity-pq", [], 0),
    ("check-bimodule", "pq", [], 0),
    ("canonical-model", "pq", [], 0),
    ("mc-check", "exact", [], 0),
    ("mc-solve", "exact", [], 0),
    ("mc-solve", "obstructed", [], 0),
    ("deform", "exact", [], 0),
    ("deform-twisted", "exact", [], 0),
    ("hf", "torsion", [], 0),
    ("hf", "mixed", [], 0),
    ("spectral", "mixed", [], 0),
    ("hochschild-check", "pq", [], 0),
    ("p-contract", "torus2", [], 0),
    ("p-contract", "pq-noncyclic", ["--max-length", "2"], 2),
    ("moduli-dim", "disc", [], 0),
    ("moduli-dim", "multiple-cover", [], 0),
    ("moduli-sweep", None, ["--bounds", "2,2,2,3"], 0),
    ("stack-check", "wrapped-3", [], 0),
    ("stack-check", "regular-bundle", [], 0),
    ("cech-class", "wrapped-3", ["--iso-trials", "5"], 0),
    ("cech-class", "coboundary-3", [], 0),
]


def case_id(case):
    cmd, name, flags, _ = case
    tail = "-".join(f.lstrip("-").replace(",", "_") for f in flags)
    return "-".join(x for x in (cmd, name, tail) if x)


def input_path(case):
    cmd, name, _, _ = case
    return None if name is None else os.path.join(DATA, f"{cmd}-{name}.json")


def argv_for(case, fmt="json"):
    cmd, _, flags, _ = case
    path = input_path(case)
    return [cmd] + ([path] if path else []) + flags + ["--format", fmt]


def run_main(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


def regenerate():
    os.makedirs(DATA, exist_ok=True)
    os.makedirs(GOLDEN, exist_ok=True)
    for case in CASES:
        path = input_path(case)
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(catalog.get(case[0], case[1]), fh, indent=1, sort_keys=True)
                fh.write("\n")
    for case in CASES:
        code, out = run_main(argv_for(case))
        assert code == case[3], (case, code)
        with open(os.path.join(GOLDEN, case_id(case) + ".json"), "w", encoding="utf-8") as fh:
            fh.write(out)


def test_every_subcommand_has_a_golden():
    assert {c[0] for c in CASES} == set(COMMANDS)


@pytest.mark.parametrize("case", CASES, ids=[case_id(c) for c in CASES])
def test_golden(case):
    code, out = run_main(argv_for(case))
    assert code == case[3]
    with open(os.path.join(GOLDEN, case_id(case) + ".json"), encoding="utf-8") as fh:
        assert out == fh.read()
    # repeated runs are byte-identical
    assert run_main(argv_for(case))[1] == out


@pytest.mark.parametrize("case", CASES[1:4], ids=[case_id(c) for c in CASES[1:4]])
def test_builtin_equals_file_input(case):
    cmd, name, flags, _ = case
    assert run_main([cmd, "--builtin", name] + flags)[1] == run_main(argv_for(case))[1]


def test_text_format():
    code, out = run_main(argv_for(CASES[1], "text"))
    assert code == 0
    assert out.startswith("PASS check-ainf") and out.rstrip().endswith("OK check-ainf")


def test_output_file(tmp_path):
    target = tmp_path / "report.json"
    assert main(argv_for(CASES[1]) + ["--output", str(target)]) == 0
    assert json.loads(target.read_text())["ok"] is True


def test_negative_control():
    code, out = run_main(["check-ainf", "--builtin", "pq", "--negative-control"])
    doc = json.loads(out)
    assert code == 0
    neg = [r for r in doc["reports"] if r["check"] == "negative-control"]
    assert len(neg) == 1 and neg[0]["ok"] and neg[0]["stats"]["defects"] > 0


def test_defects_exit_two(tmp_path):
    obj = catalog.get("check-ainf", "pq")
    # m2(p, p) = 2p breaks the Leibniz rule against d p = q
    for op in obj["algebra"]["ops"]:
        if op["k"] == 2 and op["in"] == ["p", "p"]:
            op["out"][0]["coeff"] = 2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(obj))
    code, out = run_main(["check-ainf", str(path)])
    doc = json.loads(out)
    assert code == 2 and doc["ok"] is False
    assert doc["reports"][0]["defects"]


@pytest.mark.parametrize("text,needle", [
    ("{\"algebra\": ", "line 1"),
    ("{}", "algebra"),
    ("{\"algebra\": {\"ring\": \"Q\"}}", "generators"),
])
def test_input_errors_exit_one(tmp_path, capsys, text, needle):
    path = tmp_path / "in.json"
    path.write_text(text)
    assert main(["check-ainf", str(path)]) == 1
    err = capsys.readouterr().err
    assert err.startswith("floerkit check-ainf: input error:") and needle in err


def test_unknown_builtin_and_bad_energy(capsys):
    assert main(["hf", "--builtin", "nope"]) == 1
    assert "torsion" in capsys.readouterr().err
    assert main(["hf", "--builtin", "torsion", "--energy", "abc"]) == 1


def test_energy_lowers_truncation(tmp_path, capsys):
    # thresholds above the lowered energy are rejected
    assert main(["hf", "--builtin", "torsion", "--energy", "1/2"]) == 1
    assert "threshold" in capsys.readouterr().err
    obj = catalog.get("hf", "torsion")
    obj["thresholds"] = ["1/4"]
    path = tmp_path / "hf.json"
    path.write_text(json.dumps(obj))
    doc = json.loads(run_main(["hf", str(path), "--energy", "1/2"])[1])
    # T^{7/10} vanishes below energy 1/2, so y is a free class
    h1 = [h for h in doc["result"]["homology"] if h["degree"] == 1][0]
    assert (h1["betti"], h1["torsion_exponents"]) == (1, [])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "floerkit", "cech-class", "--builtin", "wrapped-2"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
    proc = subprocess.run([sys.executable, "-m", "floerkit", "p-contract", "--builtin", "pq-noncyclic",
                           "--max-length", "2"], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 2


def test_sweep_threads_env():
    env = dict(os.environ, WORKBENCH_THREADS="2")
    proc = subprocess.run([sys.executable, "-m", "floerkit", "moduli-sweep", "--bounds", "2,2,2,3"],
                          capture_output=True, text=True, timeout=300, env=env)
    assert proc.returncode == 0
    with open(os.path.join(GOLDEN, "moduli-sweep-bounds-2_2_2_3.json"), encoding="utf-8") as fh:
        assert proc.stdout == fh.read()


if __name__ == "__main__" and "--regen" in sys.argv:
    sys.path.insert(0, HERE)
    regenerate()
