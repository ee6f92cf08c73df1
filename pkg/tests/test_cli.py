import json
import subprocess
import sys

import numpy as np
import pytest

from ai_toolkit.cli import extract_workflow, main
from ai_toolkit.core import from_slope
from ai_toolkit.presets import CIRCLE_ALPHA, CIRCLE_DELTA, CIRCLE_PARAMS, CIRCLE_SEED, CIRCLE_SIGMA
from ai_toolkit.records import load_branch, read_orbit_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_presets(capsys):
    code, out, _ = run(capsys, "classify", "--preset", "ellipse")
    assert code == 0 and "conic: Ellipse" in out and "region: RPlus" in out
    code, out, _ = run(capsys, "classify", "--a", "0.5", "--c", "0.5", "--b", "0")
    assert code == 0 and "region: Neither" in out
    code, out, _ = run(capsys, "classify", "--slope", "0.4")
    assert "conic: ParallelLines" in out


def test_malformed_parameters_exit_2(capsys):
    assert run(capsys, "classify", "--a", "0.5", "--b", "0.5", "--c", "0.5")[0] == 2
    assert run(capsys, "classify", "--a", "0.5")[0] == 2
    assert run(capsys, "classify", "--slope", "1.0")[0] == 2
    assert run(capsys, "ai-state", "--preset", "ellipse", "--word", "+x-")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["classify", "--preset", "nowhere"])
    assert exc.value.code == 2


def test_ai_state_rows(capsys):
    code, out, _ = run(capsys, "ai-state", "--preset", "henon", "--word", "+")
    assert code == 0
    w, xi = read_orbit_csv(out)
    assert w == "+" and xi[0] == 1.0
    code, out, _ = run(capsys, "ai-state", "--slope", "-0.2", "--word", "+-")
    w, xi = read_orbit_csv(out)
    b = from_slope(-0.2).b
    assert xi == pytest.approx([1 / np.sqrt(1 - 2 * b), -1 / np.sqrt(1 - 2 * b)], abs=1e-11)


def test_ai_state_outside_region(capsys):
    args = ("ai-state", "--a", "0.5", "--b", "0", "--c", "0.5", "--word", "+-+")
    assert run(capsys, *args)[0] == 3
    assert run(capsys, *args, "--force")[0] == 0


def test_random_word_is_deterministic(capsys):
    args = ("ai-state", "--preset", "vp", "--random-period", "1000", "--seed", "42")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second and len(first.splitlines()) == 1001


def test_persist(capsys, tmp_path):
    path = tmp_path / "orbit.csv"
    code, _, err = run(capsys, "persist", "--preset", "ellipse", "--random-period", "250", "--seed", "1",
                       "--epsilon", "0.15", "--M", "0.4", "--emit", str(path))
    assert code == 0 and "VanishingB" in err
    _, xi = read_orbit_csv(path.read_text())
    assert xi.size == 250
    code, _, _ = run(capsys, "persist", "--preset", "ellipse", "--word", "+-", "--epsilon", "0.5")
    assert code == 3


@pytest.mark.parametrize("preset, value", [
    ("parallel", 0.5416), ("ellipse", 0.2143), ("henon", 0.4122), ("vp", 0.0481),
])
def test_epsilon_n(capsys, preset, value):
    code, out, _ = run(capsys, "epsilon-n", "--preset", preset)
    eps = float(out.splitlines()[0].split(":")[1])
    assert code == 0 and abs(eps - value) <= 2e-3


def test_epsilon_n_general_case(capsys):
    assert run(capsys, "epsilon-n", "--a", "0.6", "--b", "0.1", "--c", "0.3")[0] == 3


def test_continue_emits_branch(capsys, tmp_path):
    path = tmp_path / "branch.json"
    code, out, _ = run(capsys, "continue", "--preset", "henon", "--word", "-", "--emit", str(path))
    assert code == 0
    rec = load_branch(path.read_text())
    assert any(e.kind.value == "PeriodDoubling" and round(e.epsilon, 2) == 1.65 for e in rec.events)
    assert "event: PeriodDoubling" in out
    d = json.loads(path.read_text())
    assert {"params", "word", "points", "events"} <= set(d)
    assert {"epsilon", "xi", "multipliers", "flags"} <= set(d["points"][0])
    assert {"kind", "epsilon", "partner"} <= set(d["events"][0])


def test_continue_is_byte_identical(capsys, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        run(capsys, "continue", "--preset", "ellipse", "--word", "-+", "--stop-at-fold", "--emit", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_continue_to_stdout_and_run_record(capsys, tmp_path):
    rr = tmp_path / "run.json"
    code, out, err = run(capsys, "continue", "--preset", "ellipse", "--word", "-+", "--stop-at-fold",
                         "--emit", "-", "--run-record", str(rr))
    assert code == 0 and "termination: first fold" in err
    assert load_branch(out).word == "-+"
    record = json.loads(rr.read_text())
    assert record["command"] == "continue" and record["started"] and record["finished"]


def test_vp_far_saddle_node(capsys):
    code, out, _ = run(capsys, "continue", "--preset", "vp", "--word", "--+", "--eps-max", "12",
                       "--ell0", "0.05", "--stop-at-fold")
    assert code == 0
    sn = [line for line in out.splitlines() if line.startswith("event: SaddleNode")]
    assert sn and round(float(sn[0].split("epsilon=")[1].split()[0]), 2) == 10.89


def test_bif_table_small(capsys, tmp_path):
    path = tmp_path / "table.csv"
    code, out, _ = run(capsys, "bif-table", "--preset", "henon", "--max-period", "3", "--workers", "1",
                       "--emit", str(path))
    assert code == 0
    assert "reference cells reproduced:" in out
    rows = path.read_text().splitlines()
    assert rows[0] == "kind,first,second,epsilon,hamming,identified_by"
    assert any(r.startswith("sn,") for r in rows[1:])


def test_extract_workflow_without_continuation():
    out, rec = extract_workflow(CIRCLE_PARAMS, CIRCLE_SIGMA, CIRCLE_DELTA, CIRCLE_ALPHA,
                                CIRCLE_SEED[::-1], run_continuation=False)
    assert out["return_time"] == 1089 and out["return_distance"] < 0.005
    assert len(out["word"]) == 1089 and rec is None


def test_extract_workflow_no_return(capsys):
    code, _, err = run(capsys, "extract-workflow", "--no-continue", "--max-steps", "50")
    assert code == 4 and "no return" in err


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "ai_toolkit.cli", "classify", "--preset", "vp"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "Hyperbola" in res.stdout
