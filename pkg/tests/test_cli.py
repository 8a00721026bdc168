from __future__ import annotations

import json
import shlex
import subprocess
import sys
from pathlib import Path

import pytest

from mpspcrp.bench import CSV_HEADER, read_csv
from mpspcrp.cli import main
from mpspcrp.instances import parse

DATA = Path(__file__).parent / "data"
FAKE = Path(__file__).parent / "fake_solver.py"


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "inst.txt"
    assert main(["gen", "--tiny", "--seed", "7", "--max-containers", "6", "--ports", "3", "4", "--out", str(path)]) == 0
    return path


def test_generate_to_stdout(capsys):
    assert main(["gen", "--family", "1A", "--seed", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("MPSPCRP v1\nPORTS 4\n")
    assert main(["gen", "--family", "1A", "--seed", "2"]) == 0
    assert capsys.readouterr().out == out


def test_family_listing(capsys):
    assert main(["gen", "--list"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("16A ") for line in lines)


def test_pipeline(tiny, tmp_path, capsys):
    plan = tmp_path / "hr1.plan"
    assert main(["hr1", str(tiny), "--plan", str(plan)]) == 0
    assert capsys.readouterr().out.startswith("HR1 objective=")
    assert main(["validate", str(tiny), str(plan)]) == 0
    assert capsys.readouterr().out.startswith("ok objective=")
    plan2 = tmp_path / "hr2.plan"
    assert main(["hr2", str(tiny), "--rounds", "50", "--seed", "1", "--plan", str(plan2)]) == 0
    assert "rounds=" in capsys.readouterr().out
    best = tmp_path / "oracle.plan"
    assert main(["oracle", str(tiny), "--plan", str(best)]) == 0
    assert "status=Optimal" in capsys.readouterr().out
    start, lp = tmp_path / "start.txt", tmp_path / "model.lp"
    assert main(["warmstart", str(tiny), str(best), "--out", str(start), "--lp", str(lp)]) == 0
    assert start.read_text().startswith("MPSPCRP-START v1\n")
    assert lp.read_text().startswith("\\ MPSP-CRP integrated model")
    assert main(["hier", str(tiny), "--plan", str(tmp_path / "hier.plan")]) == 0
    assert capsys.readouterr().out.startswith("HIER mpsp_objective=")


def test_stage_lp_files(tiny, tmp_path, capsys):
    ship = tmp_path / "ship.lp"
    assert main(["emit-lp", str(tiny), "--stage", "mpsp", "--out", str(ship)]) == 0
    assert "ship-side stage" in ship.read_text().splitlines()[0]
    plan = tmp_path / "p.plan"
    start = tmp_path / "s.txt"
    main(["hr1", str(tiny), "--plan", str(plan)])
    main(["warmstart", str(tiny), str(plan), "--out", str(start)])
    yard = tmp_path / "yard.lp"
    assert main(["emit-lp", str(tiny), "--stage", "crp", "--fixed", str(start), "--out", str(yard)]) == 0
    assert "yard-side stage" in yard.read_text().splitlines()[0]
    capsys.readouterr()
    empty = tmp_path / "empty.txt"
    empty.write_text("MPSPCRP-START v1\n")
    assert main(["emit-lp", str(tiny), "--stage", "crp", "--fixed", str(empty)]) == 3
    assert main(["emit-lp", str(tiny), "--stage", "crp"]) == 1


def test_lp_to_stdout_matches_fixture(capsys):
    assert main(["emit-lp", str(DATA / "single.txt")]) == 0
    out = capsys.readouterr()
    assert out.out == (DATA / "single.lp").read_text()
    assert out.err.startswith("LP variables=8 constraints=13")


def error_line(capsys) -> str:
    lines = capsys.readouterr().err.strip().splitlines()
    return lines[-1]


def test_bad_plan_exits_with_validation_code(tiny, tmp_path, capsys):
    plan = tmp_path / "bad.plan"
    plan.write_text("R 1 99 1 1 1 1\n")
    assert main(["validate", str(tiny), str(plan)]) == 2
    assert error_line(capsys).startswith("error: validation: ")
    plan.write_text("nonsense\n")
    assert main(["validate", str(tiny), str(plan)]) == 2
    assert main(["warmstart", str(tiny), str(plan)]) == 2


def test_missing_and_broken_inputs(tmp_path, capsys):
    assert main(["hr1", str(tmp_path / "nope.txt")]) == 1
    assert error_line(capsys).startswith("error: input: ")
    broken = tmp_path / "broken.txt"
    broken.write_text("MPSPCRP v1\nPORTS x\n")
    assert main(["hr1", str(broken)]) == 1
    assert main(["gen", "--family", "99Q"]) == 1
    assert main(["gen"]) == 1


def test_resource_caps(tmp_path, capsys):
    big = tmp_path / "big.txt"
    main(["gen", "--family", "1A", "--out", str(big)])
    assert main(["oracle", str(big)]) == 4
    assert error_line(capsys).startswith("error: resource: ")
    assert main(["emit-lp", str(big), "--max-variables", "100"]) == 4
    plan = tmp_path / "big.plan"
    main(["hr1", str(big), "--plan", str(plan)])
    assert main(["warmstart", str(big), str(plan), "--max-variables", "100"]) == 4
    assert main(["hier", str(big)]) == 4


def test_node_budget_reports_a_bound(tmp_path, capsys):
    path = tmp_path / "inst.txt"
    for seed in range(50):
        main(["gen", "--tiny", "--seed", str(seed), "--max-containers", "8", "--ports", "4", "--out", str(path)])
        main(["hr1", str(path)])
        if "objective=0 " not in capsys.readouterr().out:
            break
    assert main(["oracle", str(path), "--max-nodes", "2"]) == 4
    captured = capsys.readouterr()
    assert "status=Bound" in captured.out
    assert "upper bound" in captured.err


def test_external_hierarchical_solve(tiny, capsys):
    cmd = " ".join(shlex.quote(p) for p in (sys.executable, str(FAKE), str(tiny))) + " {lp}"
    assert main(["hier", str(tiny), "--solver-cmd", cmd]) == 0
    assert "status=Feasible" in capsys.readouterr().out
    assert main(["hier", str(tiny), "--solver-cmd", "no-such-solver-binary {lp}"]) == 1
    assert error_line(capsys).startswith("error: solver: ")


def test_errors_go_to_stderr_in_a_subprocess(tmp_path):
    done = subprocess.run(
        [sys.executable, "-m", "mpspcrp.cli", "hr1", str(tmp_path / "missing.txt")],
        capture_output=True,
        text=True,
    )
    assert done.returncode == 1
    assert done.stdout == ""
    assert done.stderr.startswith("error: input: no such file")


# -- bench -------------------------------------------------------------------


def run_small(tmp_path: Path, tag: str, extra=()):
    out = tmp_path / f"{tag}.csv"
    md = tmp_path / f"{tag}.md"
    art = tmp_path / f"{tag}-art"
    argv = ["bench", "--suite", "small", "--seeds", "4", "--hr2-rounds", "200", "--out", str(out),
            "--markdown", str(md), "--artifacts", str(art), "--no-timing", *extra]
    assert main(argv) == 0
    return out, md, art


def test_small_bench_orders_methods(tmp_path, capsys):
    out, md, art = run_small(tmp_path, "a")
    text = out.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    records = read_csv(text)
    by = {}
    for r in records:
        by.setdefault(r.instance, {})[r.method] = r
    assert len(by) == 4
    for row in by.values():
        assert set(row) == {"HR1", "HR2", "ORACLE", "HIER", "LP-EMIT"}
        assert row["ORACLE"].status == "optimal"
        assert row["ORACLE"].objective <= row["HR2"].objective <= row["HR1"].objective
        assert row["HIER"].objective >= row["ORACLE"].objective
        assert row["HR1"].time_s is None
    assert md.read_text().startswith("| Instance | HR1 O.F. |")
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest["config"]["suite"] == "small"
    assert "a.csv" in manifest["files"]
    for iid in by:
        for name in ("instance.txt", "hr1.plan", "oracle.plan", "model.lp", "start.txt"):
            assert (art / iid / name).exists()
        inst = parse(art / iid / "instance.txt")
        assert inst.size <= 7


def test_bench_is_reproducible(tmp_path):
    a = run_small(tmp_path, "a")
    b = run_small(tmp_path, "b")
    assert a[0].read_bytes() == b[0].read_bytes()
    assert a[1].read_bytes() == b[1].read_bytes()
    files_a = sorted(p.relative_to(a[2]) for p in a[2].rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b[2]) for p in b[2].rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (a[2] / rel).read_bytes() == (b[2] / rel).read_bytes()


def test_bench_with_external_solver(tmp_path, capsys):
    out, _, art = run_small(tmp_path, "ext", ["--solver-cmd", "cat {start}"])
    records = [r for r in read_csv(out.read_text()) if r.method == "EXT-SOLVER"]
    assert len(records) == 4
    hr1_rows = {r.instance: r for r in read_csv(out.read_text()) if r.method == "HR1"}
    for r in records:
        assert r.status == "feasible"
        assert r.objective == hr1_rows[r.instance].objective
        assert (art / r.instance / "solver.plan").exists()


def test_families_bench_restricted_to_one_family(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["bench", "--suite", "families", "--family", "1A", "--seeds", "2", "--hr2-rounds", "20",
                 "--out", str(out), "--no-timing"]) == 0
    records = read_csv(out.read_text())
    assert [(r.instance, r.method) for r in records] == [
        (f"1A-s{s}", m) for s in range(2) for m in ("HR1", "HR2", "LP-EMIT")
    ]
    assert all(r.status in ("feasible", "emitted") for r in records)
