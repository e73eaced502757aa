import json
import subprocess
import sys

import pytest

from snapiter.harness.cli import main


def test_check_local_exit_zero(capsys):
    assert main(["check-local", "--structure", "hashset", "--exhaustive-bound", "2"]) == 0
    assert "0 failures" in capsys.readouterr().out


def test_check_local_shows_rotation(capsys):
    assert main(["check-local", "--structure", "ubst", "--exhaustive-bound", "2",
                 "--show-rotation"]) == 0
    assert "FAIL at position" in capsys.readouterr().out


def test_lincheck_generated_corpus(tmp_path, capsys):
    path = tmp_path / "h.jsonl"
    assert main(["lincheck", "--corpus", str(path), "--generate", "50", "--seed", "3"]) == 0
    assert len(path.read_text().splitlines()) == 50


def test_lincheck_detects_wrong_expectation(tmp_path):
    path = tmp_path / "h.jsonl"
    main(["lincheck", "--corpus", str(path), "--generate", "30"])
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    rows[0]["expected"] = not rows[0]["expected"]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert main(["lincheck", "--corpus", str(path)]) == 1


def test_stress_global_exit_zero(capsys):
    rc = main(["stress-global", "--structure", "ubst", "--seconds", "0.3",
               "--cold", "1:20", "--hot", "30:40"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["violations"] == 0


def test_bench_writes_report_and_csv(tmp_path):
    out, csv = tmp_path / "r.json", tmp_path / "r.csv"
    rc = main(["bench", "--structure", "ubst", "--updaters", "1", "--iterators", "1",
               "--range", "12", "--seconds", "0.2", "--warmup", "0", "--seed", "1",
               "--out", str(out), "--csv", str(csv)])
    assert rc == 0
    r = json.loads(out.read_text())
    assert {"structure", "config", "throughput_woi", "throughput_wi", "slowdown",
            "iterator_ops", "per_thread"} <= set(r)
    assert r["config"]["seed"] == 1
    assert csv.read_text().count("\n") == 2


@pytest.mark.parametrize("argv", [
    ["bench", "--structure", "btree"],
    ["bench", "--structure", "ubst", "--range", "13"],
    ["bench", "--structure", "ubst", "--mix", "30-30-40"],
    ["bench", "--structure", "ubst", "--seconds", "0"],
    ["stress-global", "--structure", "ubst", "--cold", "1:100", "--hot", "50:60"],
    ["stress-global", "--structure", "ubst", "--cold", "9:1"],
    ["check-local", "--structure", "ubst", "--exhaustive-bound", "0"],
    ["lincheck"],
    [],
])
def test_invalid_configuration_is_a_usage_error(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "snapiter", "check-local", "--structure",
                        "ubst", "--exhaustive-bound", "1"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
