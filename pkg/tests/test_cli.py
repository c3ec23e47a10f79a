from __future__ import annotations

import json
import subprocess
import sys

import pytest

from conftest import read_golden_rows
from exmachine.cli import main
from exmachine.parser import load_machine
from exmachine.qxfamily import build_qx, extract_language_prefix


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_collatz_trace(capsys):
    code, out, _ = cli(capsys, "run", "collatz.exm", "--tape", "# #11111#", "--trace")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[0] == "STATE"
    rows = lines[1:-1]
    golden = read_golden_rows("collatz_n5.trace")
    assert len(rows) == len(golden)
    for line, g in zip(rows, golden):
        toks = line.split()
        assert toks[0] == g[0] and int(toks[3]) == g[2]
    assert lines[-1].startswith("halted: state h")


def test_run_json_trace_mirrors_text(capsys):
    _, out, _ = cli(capsys, "run", "qx", "--tape", "# #aaaa##", "--bits", "seed:3", "--trace-format", "json")
    records = [json.loads(line) for line in out.splitlines()]
    summary = records.pop()
    assert summary["outcome"] == "halted"
    assert set(records[0]) >= {"state_label", "tape", "head", "executed", "new", "bit"}
    assert summary["bits_consumed"] == sum(r["bit"] is not None for r in records)


def test_build_qx_then_membership(capsys, tmp_path):
    q = tmp_path / "q.exm"
    assert cli(capsys, "build-qx", "11010", "-o", str(q))[0] == 0
    code, out, _ = cli(capsys, "membership", str(q), "--n", "2")
    assert code == 0
    assert out.splitlines() == ["N", "bits used: 0"]


def test_membership_saves_evolved(capsys, tmp_path):
    q, q2, bits = tmp_path / "q.exm", tmp_path / "q2.exm", tmp_path / "b.txt"
    cli(capsys, "build-qx", "11010", "-o", str(q))
    bits.write_text("0 1 1\n")
    code, out, _ = cli(capsys, "membership", str(q), "--n", "7", "--bits", f"file:{bits}",
                       "--save-evolved", str(q2))
    assert code == 0 and out.splitlines() == ["Y", "bits used: 3"]
    evolved = load_machine(str(q2))
    assert extract_language_prefix(evolved) == [1, 1, 0, 1, 0, 0, 1, 1]
    assert evolved.structurally_equal(build_qx("11010011"))


def test_build_qx_empty_prefix(capsys):
    code, out, _ = cli(capsys, "build-qx", "-")
    assert code == 0 and out.startswith(";; Q(x)")


def test_randomwalk_step_limit(capsys):
    code, out, _ = cli(capsys, "run", "randomwalk.exm", "--tape", "# ##", "--max-steps", "100", "--bits", "seed:1")
    assert code == 6 and out.startswith("step_limit")


def test_run_saves_evolved_machine(capsys, tmp_path):
    out_path = tmp_path / "e.exm"
    code, _, _ = cli(capsys, "run", "example22", "--max-steps", "3", "--save-evolved", str(out_path))
    assert code == 6
    assert load_machine(str(out_path)).state_count == 2


@pytest.mark.parametrize("argv,code", [
    (["run", "randomwalk"], 2),                                   # needs --bits
    (["run", "collatz", "--bits", "seed:1"], 2),                  # has no random instructions
    (["run", "nonexistent.exm"], 2),
    (["run", "collatz", "--tape", "no-space"], 3),
    (["run", "qx", "--tape", "# #aa#", "--bits", "file:/dev/null"], 5),
    (["membership", "qx", "--n", "3", "--bits", "file:/dev/null"], 5),
    (["build-qx", "102"], 2),
    (["psi-inv", "012"], 2),
    (["bits-test", "--bits", "nope"], 2),
    (["halting-lab", "--m", "8", "--exact-only"], 6),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = cli(capsys, *argv)
    assert got == code
    assert "error" in err


def test_stuck_exit_code(capsys, tmp_path):
    p = tmp_path / "s.exm"
    p.write_text("states: 0 1\nhalt: 1\n(0, #, 0, 1, 0)\n")
    code, out, _ = cli(capsys, "run", str(p))
    assert code == 4 and out.startswith("stuck")


def test_membership_stuck_names_the_error(capsys, tmp_path):
    p = tmp_path / "s.exm"
    p.write_text("alphabet: a\nstates: 0 1\nhalt: 1\n(0, #, 0, 1, 0)\n")
    code, _, err = cli(capsys, "membership", str(p), "--n", "1")
    assert code == 4 and "MachineStuck" in err


def test_machine_error_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.exm"
    p.write_text("states: 0 1\nhalt: 1\n(0, #, 5, 1, 0)\n")
    assert cli(capsys, "run", str(p))[0] == 9


def test_qrng_without_endpoint(capsys, monkeypatch):
    monkeypatch.delenv("EXM_QRNG_URL", raising=False)
    code, _, err = cli(capsys, "run", "randomwalk", "--bits", "qrng", "--max-steps", "5")
    assert code == 8 and "RemoteUnreachable" in err


def test_argparse_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["membership", "qx"])
    assert exc.value.code == 2


def test_psi_commands(capsys):
    assert cli(capsys, "psi", "6")[1] == "11\n"
    assert cli(capsys, "psi-inv", "000")[1] == "7\n"
    assert cli(capsys, "psi-inv", "-")[1] == "0\n"


def test_collatz_survey_json(capsys):
    code, out, _ = cli(capsys, "collatz-survey", "--odd-max", "9", "--json")
    rows = json.loads(out)
    assert code == 0 and [r["steps"] for r in rows] == [3, 509, 384, 6714, 7629]


def test_halting_lab_outputs(capsys, tmp_path):
    evolved, report = tmp_path / "e.exm", tmp_path / "r.json"
    code, out, _ = cli(capsys, "halting-lab", "--m", "8", "--max-states", "1", "--oracle-steps", "1000",
                       "-o", str(evolved), "--report", str(report))
    assert code == 0 and "prefix 100000011" in out
    data = json.loads(report.read_text())
    assert data["bits"] == [1, 0, 0, 0, 0, 0, 0, 1, 1]
    assert extract_language_prefix(load_machine(str(evolved))) == data["bits"]


def test_phi_check(capsys):
    code, out, _ = cli(capsys, "phi-check", "collatz", "--tape", "# #11111#", "--steps", "1000", "--report", "json")
    rep = json.loads(out)
    assert code == 0 and rep["all_equal"] and rep["halted_at"] == rep["exit_at"] == 384


def test_bits_test(capsys):
    code, out, _ = cli(capsys, "bits-test", "--bits", "seed:7", "--n", "100000")
    assert code == 0 and out.count("pass") == 2


def test_bits_test_flags_biased_file(capsys, tmp_path):
    p = tmp_path / "b.txt"
    p.write_text("01" * 5000)
    code, out, _ = cli(capsys, "bits-test", "--bits", f"file:{p}", "--n", "10000", "--walks", "200")
    assert code == 1 and "FAIL" in out


@pytest.mark.parametrize("argv", [
    ["run", "randomwalk", "--bits", "seed:9", "--max-steps", "300", "--trace"],
    ["membership", "qx", "--n", "6", "--bits", "seed:4", "--trace"],
    ["collatz-survey", "--odd-max", "15"],
])
def test_byte_identical_stdout(argv):
    runs = [subprocess.run([sys.executable, "-m", "exmachine", *argv], capture_output=True, check=False)
            for _ in range(2)]
    assert runs[0].stdout == runs[1].stdout and runs[0].stdout
    assert runs[0].returncode == runs[1].returncode
