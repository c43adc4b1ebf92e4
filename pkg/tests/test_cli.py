"""End-to-end command-line behavior with the synthetic oracle."""
import io
import json
import random

import pytest

from dialplan.cli import AppConfig, cmd_chat, main
from dialplan.core import history_to_record
from dialplan.oracle import random_task

from helpers import SPACE, demo_history


@pytest.fixture()
def history_file(tmp_path):
    path = tmp_path / "history.json"
    path.write_text(json.dumps(history_to_record(demo_history(), SPACE, "demo")),
                    encoding="utf-8")
    return str(path)


@pytest.fixture()
def task_file(tmp_path):
    path = tmp_path / "task.json"
    random_task(len(SPACE), random.Random(11)).save(str(path))
    return str(path)


def _plan_args(history_file, task_file, output, extra=()):
    return ["--oracle", "synthetic", "--synthetic-task", task_file,
            "--output", output, "--n-simulations", "12", "--seed", "5",
            *extra, "plan", history_file]


# --- plan --------------------------------------------------------------------

def test_plan_writes_result(tmp_path, history_file, task_file, capsys):
    out = str(tmp_path / "plan.json")
    assert main(_plan_args(history_file, task_file, out)) == 0
    result = json.loads((tmp_path / "plan.json").read_text())
    assert sum(result["per_act_visits"]) == 12
    assert 0 <= result["chosen_act"] < len(SPACE)
    stdout = capsys.readouterr().out
    assert "chosen act:" in stdout
    assert "simulations: 12" in stdout


def test_plan_is_deterministic(tmp_path, history_file, task_file):
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert main(_plan_args(history_file, task_file, out1)) == 0
    assert main(_plan_args(history_file, task_file, out2)) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_plan_seed_changes_rollouts(tmp_path, history_file, task_file):
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    main(_plan_args(history_file, task_file, out1))
    main(["--oracle", "synthetic", "--synthetic-task", task_file,
          "--output", out2, "--n-simulations", "12", "--seed", "6",
          "plan", history_file])
    r1 = json.loads((tmp_path / "a.json").read_text())
    r2 = json.loads((tmp_path / "b.json").read_text())
    assert r1["per_act_q"] != r2["per_act_q"]


def test_plan_malformed_history_exits_nonzero(tmp_path, task_file, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dialog_id": "x", "turns": [
        {"speaker": "user", "act": None, "text": "hi"},
    ]}), encoding="utf-8")
    code = main(["--synthetic-task", task_file, "plan", str(bad)])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_plan_missing_file_exits_nonzero(task_file):
    assert main(["--synthetic-task", task_file, "plan", "/nonexistent.json"]) == 1


# --- configuration -----------------------------------------------------------

def test_config_file_with_overrides(tmp_path, history_file, task_file):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "oracle": "synthetic",
        "synthetic_task": task_file,
        "search": {"n_simulations": 3, "cache_size": 2},
    }), encoding="utf-8")
    out = str(tmp_path / "plan.json")
    code = main(["--config", str(config_path), "--n-simulations", "7",
                 "--output", out, "plan", history_file])
    assert code == 0
    assert sum(json.loads((tmp_path / "plan.json").read_text())["per_act_visits"]) == 7


def test_unknown_config_field_exits_two(tmp_path, history_file):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"oracles": "synthetic"}), encoding="utf-8")
    assert main(["--config", str(config_path), "plan", history_file]) == 2


def test_invalid_override_exits_two(history_file, task_file):
    code = main(["--synthetic-task", task_file, "--n-simulations", "0",
                 "plan", history_file])
    assert code == 2


def test_boolean_override_parsing(tmp_path, history_file, task_file):
    out = str(tmp_path / "plan.json")
    code = main(_plan_args(history_file, task_file, out,
                           extra=["--open-loop", "false",
                                  "--prior-weighted-puct", "no"]))
    assert code == 0


def test_invalid_boolean_override_exits_two(history_file, task_file):
    assert main(["--synthetic-task", task_file, "--open-loop", "sideways",
                 "plan", history_file]) == 2


# --- chat --------------------------------------------------------------------

def _chat_config(task_file, tmp_path, **search):
    from dialplan.core import SearchConfig

    return AppConfig(search=SearchConfig(n_simulations=5, **search),
                     oracle="synthetic", synthetic_task=task_file,
                     output=str(tmp_path / "chat.jsonl"))


def test_chat_scripted_session(tmp_path, task_file):
    config = _chat_config(task_file, tmp_path)
    stdin = io.StringIO("sounds interesting\n/quit\n")
    stdout = io.StringIO()
    assert cmd_chat(config, stdin=stdin, stdout=stdout) == 0
    lines = stdout.getvalue().splitlines()
    assert len([l for l in lines if l.startswith("Persuader:")]) == 2
    record = json.loads((tmp_path / "chat.jsonl").read_text())
    assert record["dialog_id"] == "chat"
    speakers = [t["speaker"] for t in record["turns"]]
    assert speakers == ["system", "user", "system"]
    assert record["turns"][1]["text"] == "sounds interesting"
    assert len(record["per_turn_plan"]) == 2


def test_chat_stats_command(tmp_path, task_file):
    config = _chat_config(task_file, tmp_path)
    stdin = io.StringIO("/stats\n/quit\n")
    stdout = io.StringIO()
    assert cmd_chat(config, stdin=stdin, stdout=stdout) == 0
    stats_lines = [l for l in stdout.getvalue().splitlines()
                   if l.startswith("{")]
    assert stats_lines
    parsed = json.loads(stats_lines[0])
    assert "per_act_visits" in parsed


def test_chat_eof_ends_session(tmp_path, task_file):
    config = _chat_config(task_file, tmp_path)
    assert cmd_chat(config, stdin=io.StringIO(""), stdout=io.StringIO()) == 0


# --- selfplay ----------------------------------------------------------------

def test_selfplay_writes_transcripts(tmp_path, task_file, capsys):
    out = str(tmp_path / "selfplay.jsonl")
    code = main(["--synthetic-task", task_file, "--output", out,
                 "--n-simulations", "5", "selfplay",
                 "--episodes", "2", "--turn-cap", "3"])
    assert code == 0
    lines = (tmp_path / "selfplay.jsonl").read_text().splitlines()
    assert len(lines) == 2
    for i, line in enumerate(lines):
        record = json.loads(line)
        assert record["dialog_id"] == f"selfplay-{i}"
        system_turns = [t for t in record["turns"] if t["speaker"] == "system"]
        assert len(system_turns) == 3
        assert len(record["per_turn_plan"]) == 3
        for turn in system_turns:
            assert turn["act"] in {act.name for act in SPACE}
    assert "completed 2/2 episodes" in capsys.readouterr().out


def test_selfplay_is_deterministic(tmp_path, task_file):
    args = ["--synthetic-task", task_file, "--n-simulations", "4",
            "selfplay", "--episodes", "1", "--turn-cap", "2"]
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["--output", str(out1), *args])
    main(["--output", str(out2), *args])
    assert out1.read_bytes() == out2.read_bytes()


def test_selfplay_rejects_bad_episode_count(task_file):
    assert main(["--synthetic-task", task_file, "selfplay",
                 "--episodes", "0"]) == 1


# --- eval-static and analyze -------------------------------------------------

def _write_corpus(tmp_path, n=2):
    path = tmp_path / "corpus.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(json.dumps(history_to_record(demo_history(), SPACE, f"d{i}")) + "\n")
    return str(path)


def test_eval_static_stub_judge(tmp_path, task_file, capsys):
    corpus = _write_corpus(tmp_path)
    out = str(tmp_path / "report.json")
    code = main(["--synthetic-task", task_file, "--output", out,
                 "--n-simulations", "3", "eval-static", corpus,
                 "--planner-a", "search", "--planner-b", "direct",
                 "--judge", "stub", "--runs", "1"])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["wins"] + report["losses"] + report["ties"] == 4
    assert "win rate:" in capsys.readouterr().out


def test_analyze_pipeline(tmp_path, task_file, capsys):
    selfplay_out = str(tmp_path / "transcripts.jsonl")
    main(["--synthetic-task", task_file, "--output", selfplay_out,
          "--n-simulations", "4", "selfplay", "--episodes", "2",
          "--turn-cap", "3"])
    analyze_out = str(tmp_path / "dist.json")
    code = main(["--output", analyze_out, "analyze", selfplay_out])
    assert code == 0
    dist = json.loads((tmp_path / "dist.json").read_text())
    assert set(dist) == {"1-2", "3-5", "6-10", "overall"}
    assert sum(dist["overall"].values()) == pytest.approx(1.0)
    assert "turns overall:" in capsys.readouterr().out


def test_analyze_missing_file_exits_nonzero():
    assert main(["analyze", "/nonexistent.jsonl"]) == 1
