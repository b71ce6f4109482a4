import json
import shutil
import subprocess
import sys

import pytest

from choicebound.cli import RunConfig, cmd_run, main
from choicebound.corpus import CORPUS_DIR
from choicebound.parser import parse_program

DEMO = CORPUS_DIR / "choice-demo" / "program.dl"
FS = CORPUS_DIR / "fieldsensitive"


def run(*args):
    return main([str(a) for a in args])


def test_run_choice_demo(tmp_path):
    assert run("run", DEMO, "--out", tmp_path) == 0
    assert (tmp_path / "r.csv").read_text() == "1\t1\n2\t4\n3\t6\n"
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["relations"]["r"] == {"tuples": 3, "rejected_by_choice": 3}
    assert metrics["seed"] == 0 and metrics["mode"] == "seminaive"


def test_run_twice_identical(tmp_path):
    for d in ("a", "b"):
        assert run("run", FS / "program.dl", "--facts", FS / "facts", "--bounds", FS / "bounds.cb",
                   "--seed", 0, "--out", tmp_path / d) == 0
    for f in sorted((tmp_path / "a").glob("*.csv")):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_run_missing_program(tmp_path, capsys):
    assert run("run", tmp_path / "missing.dl", "--out", tmp_path / "o") == 1
    assert "missing.dl" in capsys.readouterr().err


def test_run_parse_error_has_location(tmp_path, capsys):
    bad = tmp_path / "bad.dl"
    bad.write_text(".decl P(x: symbol)\nP(x) :- Q(x).\n")
    assert run("run", bad, "--out", tmp_path / "o") == 1
    assert f"{bad}:2:9: unknown-relation" in capsys.readouterr().err


def test_run_stratification_error(tmp_path, capsys):
    bad = tmp_path / "neg.dl"
    bad.write_text(".decl P(x: symbol)\n.decl Q(x: symbol)\nP(x) :- Q(x), !P(x).\n")
    assert run("run", bad, "--out", tmp_path / "o") == 1
    assert "not stratifiable" in capsys.readouterr().err


def test_run_evaluation_error(tmp_path, capsys):
    bad = tmp_path / "div.dl"
    bad.write_text(".decl A(x: number)\n.decl B(x: number)\nA(0).\nB(1 % x) :- A(x).\n")
    assert run("run", bad, "--out", tmp_path / "o") == 2
    assert "modulo by zero" in capsys.readouterr().err


def test_run_bad_facts(tmp_path, capsys):
    facts = tmp_path / "facts"
    facts.mkdir()
    (facts / "Assign.facts").write_text("only-one-column\n")
    assert run("run", FS / "program.dl", "--facts", facts, "--out", tmp_path / "o") == 1
    assert "Assign.facts:1" in capsys.readouterr().err
    assert run("run", FS / "program.dl", "--facts", tmp_path / "nodir", "--out", tmp_path / "o") == 1


def test_run_naive_mode_and_metrics_path(tmp_path):
    m = tmp_path / "m" / "metrics.json"
    assert run("run", FS / "program.dl", "--facts", FS / "facts", "--out", tmp_path / "o",
               "--mode", "naive", "--threads", 4, "--metrics", m) == 0
    data = json.loads(m.read_text())
    assert data["mode"] == "naive" and data["threads"] == 1


def test_runconfig_invariants():
    assert RunConfig("p.dl").seed == 0
    assert RunConfig("p.dl", mode="naive", threads=8).threads == 1
    with pytest.raises(ValueError):
        RunConfig("p.dl", mode="fast")


def test_cmd_run_direct(tmp_path):
    assert cmd_run(RunConfig(str(DEMO), out=str(tmp_path))) == 0


def test_seed_recorded_in_metrics(tmp_path):
    bounds = tmp_path / "b.cb"
    bounds.write_text("VarPointsTo bound=(var) limit=2 count=(obj)\n")
    assert run("run", FS / "program.dl", "--facts", FS / "facts", "--bounds", bounds, "--seed", 5,
               "--out", tmp_path / "o") == 0
    metrics = json.loads((tmp_path / "o" / "metrics.json").read_text())
    assert metrics["seed"] == 5


def test_transform_golden(tmp_path):
    out = tmp_path / "t.dl"
    assert run("transform", FS / "program.dl", "--bounds", FS / "bounds.cb", "--out", out) == 0
    text = out.read_text()
    assert ".decl VarPointsTo__bounded(var: symbol, obj: symbol, __bucket: number) choice-domain (var, __bucket)" in text
    parse_program(text)


def test_transform_empty_bounds_identity(tmp_path, capsys):
    empty = tmp_path / "empty.cb"
    empty.write_text("# nothing\n")
    src = tmp_path / "p.dl"
    from choicebound.parser import format_program
    src.write_text(format_program(parse_program((FS / "program.dl").read_text())))
    assert run("transform", src, "--bounds", empty) == 0
    assert capsys.readouterr().out == src.read_text()


def test_transform_negation_warning(tmp_path, capsys):
    p = tmp_path / "neg.dl"
    p.write_text('.decl A(x: symbol, y: symbol)\n.decl V(x: symbol, y: symbol)\n.decl W(x: symbol)\n'
                 'V(x, y) :- A(x, y).\nW(x) :- A(x, _), !V(x, "k").\n')
    b = tmp_path / "neg.cb"
    b.write_text("V bound=(x) limit=1 count=(y)\n")
    assert run("transform", p, "--bounds", b, "--out", tmp_path / "out.dl") == 0
    err = capsys.readouterr().err
    assert "warning:" in err and "negates bounded relation V" in err


def test_transform_error_names_spec(tmp_path, capsys):
    b = tmp_path / "bad.cb"
    b.write_text("VarPointsTo bound=(var) limit=2 count=(obj)\nFoo bound=(x) limit=2 count=(y)\n")
    assert run("transform", FS / "program.dl", "--bounds", b) == 1
    assert "bound spec #1" in capsys.readouterr().err


def test_transform_twice_rejected(tmp_path, capsys):
    once = tmp_path / "once.dl"
    assert run("transform", FS / "program.dl", "--bounds", FS / "bounds.cb", "--out", once) == 0
    assert run("transform", once, "--bounds", FS / "bounds.cb") == 1
    assert "already declared" in capsys.readouterr().err


def test_diff_self(tmp_path, capsys):
    run("run", FS / "program.dl", "--facts", FS / "facts", "--out", tmp_path / "a")
    assert run("diff", tmp_path / "a", tmp_path / "a", "--report", tmp_path / "r.json") == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert all(d["a_minus_b"] == 0 and d["b_minus_a"] == 0 for d in rep["relations"].values())


def test_diff_bounded_vs_unbounded_blowup(tmp_path):
    assert run("generate", "--vars", 30, "--objs", 30, "--density", 0.05, "--out", tmp_path / "facts") == 0
    bounds = tmp_path / "b.cb"
    bounds.write_text("VarPointsTo bound=(var) limit=3 count=(obj)\n")
    run("run", FS / "program.dl", "--facts", tmp_path / "facts", "--out", tmp_path / "un")
    run("run", FS / "program.dl", "--facts", tmp_path / "facts", "--bounds", bounds, "--out", tmp_path / "b")
    assert run("diff", tmp_path / "un", tmp_path / "b", "--bounds", bounds, "--report", tmp_path / "r.json") == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    vpt = rep["relations"]["VarPointsTo"]
    assert vpt["a_minus_b"] > 0 and vpt["b_minus_a"] == 0
    assert rep["bounds"][0]["violations_a"] and not rep["bounds"][0]["violations_b"]


def test_diff_doctored_output_violates(tmp_path, capsys):
    bounds = tmp_path / "b.cb"
    bounds.write_text("VarPointsTo bound=(var) limit=1 count=(obj)\n")
    run("run", FS / "program.dl", "--facts", FS / "facts", "--bounds", bounds, "--out", tmp_path / "b")
    shutil.copytree(tmp_path / "b", tmp_path / "doctored")
    with open(tmp_path / "doctored" / "VarPointsTo.csv", "a") as fh:
        fh.write("v1\to2\n")
    assert run("diff", tmp_path / "b", tmp_path / "doctored", "--bounds", bounds) == 3
    err = capsys.readouterr().err
    assert "violation in B" in err and "'v1'" in err


def test_diff_schema_mismatch(tmp_path, capsys):
    run("run", DEMO, "--out", tmp_path / "a")
    shutil.copytree(tmp_path / "a", tmp_path / "b")
    schema = json.loads((tmp_path / "b" / "schema.json").read_text())
    schema["r"]["columns"] = ["p", "q"]
    (tmp_path / "b" / "schema.json").write_text(json.dumps(schema))
    assert run("diff", tmp_path / "a", tmp_path / "b") == 1
    assert run("diff", tmp_path / "a", tmp_path / "missing") == 1


def test_bench_tiny(capsys):
    assert run("bench", "--vars", 3, "--objs", 3, "--density", 1.0, "--limit", 2) == 0
    out = capsys.readouterr().out
    assert "speedup" in out and "9 VarPointsTo" in out


def test_bench_deterministic(capsys):
    args = ("bench", "--vars", 40, "--objs", 40, "--density", 0.05, "--limit", 4, "--hasher", "ordprod", "--seed", 3)
    run(*args)
    first = [l for l in capsys.readouterr().out.splitlines() if "tuples" in l]
    run(*args)
    second = [l for l in capsys.readouterr().out.splitlines() if "tuples" in l]
    strip = lambda ls: [l.split("s ", 1)[1] for l in ls]  # noqa: E731
    assert strip(first) == strip(second)


def test_bench_depth2(capsys):
    assert run("bench", "--vars", 16, "--objs", 4, "--density", 0.2, "--limit", 2, "--depth", 2) == 0


def test_bench_invalid_params(capsys):
    assert run("bench", "--vars", 3, "--objs", 3, "--density", 2.0, "--limit", 2) == 1
    assert run("bench", "--vars", 3, "--objs", 3, "--limit", 0) == 1


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "choicebound", "run", str(DEMO), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "r.csv").exists()
