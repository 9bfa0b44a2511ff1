from __future__ import annotations

import json
import subprocess
import sys

import pytest

from artifact.cli import build_parser, main

from conftest import CORPUS


def run(args: list[str], capsys) -> tuple[int, str, str]:
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_prove_yes_exit_code(capsys):
    code, out, _ = run(["prove", str(CORPUS / "rw.ptrs")], capsys)
    assert code == 0 and out.startswith("YES")


def test_prove_maybe_exit_code(capsys):
    code, out, _ = run(["prove", str(CORPUS / "ternary_tree.ptrs"), "--timeout", "60"], capsys)
    assert code == 1 and out.startswith("MAYBE")


def test_no_transforms_flag(capsys):
    code, _, _ = run(["prove", str(CORPUS / "incpl.ptrs"), "--no-transforms"], capsys)
    assert code == 1


def test_machine_output(capsys):
    code, out, _ = run(["prove", str(CORPUS / "rw.ptrs"), "--proof-format", "machine"], capsys)
    assert code == 0 and json.loads(out)["verdict"] == "YES"


def test_input_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ptrs"
    bad.write_text("(RULES a -> {1/2 : b, 1/3 : c})")
    code, _, err = run(["prove", str(bad)], capsys)
    assert code == 2 and err.startswith("error:")


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["prove", str(tmp_path / "none.ptrs")], capsys)
    assert code == 2 and "error" in err


def test_simulate_output(capsys):
    code, out, _ = run(
        ["simulate", str(CORPUS / "rw.ptrs"), "--start", "g(c)", "--trials", "100", "--depth", "4"],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("terminated: ") and lines[0].endswith("/100")
    assert lines[1].startswith("estimate: ")
    assert lines[2].startswith("95% Wilson interval: [")
    assert lines[-1] == "exact leaf mass up to depth 4: 5/8"


def test_simulate_bad_start(capsys):
    code, _, err = run(["simulate", str(CORPUS / "rw.ptrs"), "--start", "g(a,b)"], capsys)
    assert code == 2 and "error" in err


def test_simulate_policy_note(tmp_path, capsys):
    f = tmp_path / "overlap.ptrs"
    f.write_text("(RULES e -> d1 e -> d2)")
    _, out, _ = run(["simulate", str(f), "--start", "e", "--trials", "5"], capsys)
    assert "policy" in out


def test_defaults():
    args = build_parser().parse_args(["prove", "x.ptrs"])
    assert (args.max_coeff, args.transform_depth, args.timeout) == (2, 8, 300.0)
    assert (args.proof_format, args.jobs, args.seed, args.no_transforms) == ("text", 1, 0, False)


def test_rejects_bad_flag_values():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["prove", "x.ptrs", "--max-coeff", "0"])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "artifact", "prove", str(CORPUS / "binary_tree.ptrs")],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("YES")
