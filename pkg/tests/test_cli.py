"""CLI surface: every subcommand, exit codes, determinism of outputs."""

import os
from pathlib import Path

import pytest

from matchfuzz.cli import main

GOOD = "define i64 @f(i32 %a) { Entry: %m = alloca i64  %L = load i64, %m  ret i64 %L }"
BAD_TYPES = "define void @f() { E: %x = add i8 1, i16 2  ret }"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_targets_lists_builtins(capsys):
    code, out, _ = run_cli(capsys, "targets")
    assert code == 0
    assert "alpha" in out and "vex" in out
    assert "patterns" in out and "table" in out


def test_verify_exit_codes(tmp_path, capsys):
    good = tmp_path / "g.ir"
    good.write_text(GOOD)
    assert run_cli(capsys, "verify", str(good))[0] == 0
    bad = tmp_path / "b.ir"
    bad.write_text(BAD_TYPES)
    code, out, _ = run_cli(capsys, "verify", str(bad))
    assert code == 1
    assert "TypeMismatch" in out


def test_mutate_deterministic(tmp_path, capsys):
    src = tmp_path / "in.ir"
    src.write_text(GOOD)
    code, out1, _ = run_cli(capsys, "mutate", str(src), "--seed", "3", "--steps", "5")
    assert code == 0
    _, out2, _ = run_cli(capsys, "mutate", str(src), "--seed", "3", "--steps", "5")
    assert out1 == out2
    dest = tmp_path / "out.ir"
    run_cli(capsys, "mutate", str(src), "--seed", "3", "--steps", "5", "-o", str(dest))
    assert dest.read_text() == out1
    assert run_cli(capsys, "verify", str(dest))[0] == 0


def test_select_and_trace(tmp_path, capsys):
    src = tmp_path / "m.ir"
    src.write_text(GOOD)
    code, out, _ = run_cli(capsys, "select", str(src), "--target", "vex")
    assert code == 0
    assert "verdict: ok" in out
    code, out, _ = run_cli(capsys, "select", str(src), "--target", "vex", "--trace")
    assert code == 0
    lines = [l for l in out.splitlines() if "," in l and l.split(",")[0].isdigit()]
    assert lines and lines[0].startswith("0,SCOPE")


def test_select_feature_off_finds_missing(tmp_path, capsys):
    src = tmp_path / "v.ir"
    src.write_text(
        "define <4 x i32> @f(<4 x i32> %a) { E: %s = add <4 x i32> %a, %a  ret <4 x i32> %s }"
    )
    code, out, _ = run_cli(capsys, "select", str(src), "--target", "vex", "--feature", "simd=off")
    assert code == 1
    assert "MissingPattern" in out
    code, _, _ = run_cli(capsys, "select", str(src), "--target", "vex")
    assert code == 0


def test_fuzz_decode_covreport_replay_pipeline(tmp_path, capsys):
    out_dir = tmp_path / "d1"
    code, out, _ = run_cli(
        capsys, "fuzz", "--target", "vex", "--seed", "7", "--execs", "400", "--out", str(out_dir)
    )
    assert code == 0  # no findings on vex
    assert (out_dir / "stats.csv").exists()

    code, out, _ = run_cli(capsys, "cov-report", str(out_dir / "coverage.dump"))
    assert code == 0 and "matcher:" in out

    code, out, _ = run_cli(capsys, "decode", str(out_dir / "coverage.dump"), "--target", "vex")
    assert code == 0
    assert "uncovered" in out

    entry = sorted((out_dir / "corpus").glob("*.ir"))[0]
    code, out, _ = run_cli(capsys, "replay", str(entry), "--target", "vex")
    assert code == 0 and "verdict: ok" in out


def test_fuzz_exit_1_on_findings(tmp_path, capsys):
    out_dir = tmp_path / "d2"
    code, out, _ = run_cli(
        capsys,
        "fuzz", "--target", "vex-trap", "--seed", "5", "--execs", "4000", "--out", str(out_dir),
        "--max-functions", "1", "--max-blocks", "4", "--max-instrs", "5",
    )
    assert code == 1
    assert "InjectedAbort" in out
    finding = sorted((out_dir / "findings").glob("*.ir"))[0]
    code, out, _ = run_cli(capsys, "replay", str(finding), "--target", "vex-trap")
    assert code == 1
    assert "InjectedAbort" in out


def test_fuzz_determinism_same_stats(tmp_path, capsys):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    run_cli(capsys, "fuzz", "--target", "vex", "--seed", "7", "--execs", "300", "--out", str(d1))
    run_cli(capsys, "fuzz", "--target", "vex", "--seed", "7", "--execs", "300", "--out", str(d2))
    assert (d1 / "stats.csv").read_bytes() == (d2 / "stats.csv").read_bytes()
    assert sorted(p.name for p in (d1 / "corpus").iterdir()) == sorted(
        p.name for p in (d2 / "corpus").iterdir()
    )


def test_no_guidance_flag(tmp_path, capsys):
    out_dir = tmp_path / "d3"
    code, _, _ = run_cli(
        capsys, "fuzz", "--target", "vex", "--seed", "7", "--execs", "200",
        "--no-guidance", "--out", str(out_dir),
    )
    assert code == 0
    header = (out_dir / "stats.csv").read_text().splitlines()[0]
    assert header == "executions,corpus,edge_buckets,matcher_bits,findings"


def test_matchfuzz_out_env(tmp_path, capsys, monkeypatch):
    out_dir = tmp_path / "env_out"
    monkeypatch.setenv("MATCHFUZZ_OUT", str(out_dir))
    code, _, _ = run_cli(capsys, "fuzz", "--target", "alpha", "--seed", "1", "--execs", "50")
    assert code == 0
    assert (out_dir / "stats.csv").exists()


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fuzz", "--target", "vex"])  # missing budget
    assert exc.value.code == 2
    code, _, err = run_cli(capsys, "select", "/nonexistent.ir")
    assert code == 2


def test_unknown_target_exit_2(tmp_path, capsys):
    src = tmp_path / "m.ir"
    src.write_text(GOOD)
    code, _, err = run_cli(capsys, "select", str(src), "--target", "z80")
    assert code == 2
    assert "unknown target" in err


def test_custom_target_file(tmp_path, capsys):
    tspec = tmp_path / "demo.tspec"
    tspec.write_text(
        "target demo\nwidths 32 64\nvectors off\n"
        "pattern add32 10 add res=i32 emits ADD32\n"
        "pattern ret_any 1 load res=any emits LD\n"
        "pattern st_any 1 store op1=any emits ST\n"
        "pattern alloca 1 alloca res=ptr emits FRAME\n"
    )
    src = tmp_path / "m.ir"
    src.write_text(GOOD)
    code, out, _ = run_cli(capsys, "select", str(src), "--target", str(tspec))
    assert code == 0
    assert "verdict: ok" in out
