"""Command-line entry points: plan, chat, selfplay, eval-static, analyze."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import random
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .core import (
    ActionSpace,
    DialogueHistory,
    PlanResult,
    SearchConfig,
    Speaker,
    history_from_record,
    history_to_record,
    load_corpus,
    system_turn,
    user_turn,
    validate_history,
)
from .engine import SearchError, search
from .evaluation import (
    da_distribution,
    make_llm_judge,
    run_static_eval,
    stub_judge_first_option,
)
from .oracle import OracleError, OracleInterface, SyntheticOracle, SyntheticTask, random_task
from .task_p4g import P4GTask

log = logging.getLogger(__name__)


@dataclass
class AppConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    oracle: str = "synthetic"  # "synthetic" | "llm"
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo"
    task_assets: Optional[str] = None
    synthetic_task: Optional[str] = None
    cache_dir: Optional[str] = None
    output: Optional[str] = None
    log_level: str = "INFO"

    @classmethod
    def from_file(cls, path: str) -> "AppConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        search_cfg = SearchConfig.from_dict(data.pop("search", {}))
        known = {f.name for f in dataclasses.fields(cls)} - {"search"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(search=search_cfg, **data)


def _load_task(config: AppConfig) -> P4GTask:
    if config.task_assets:
        return P4GTask.load(config.task_assets)
    return P4GTask.default()


def _build_oracle(config: AppConfig, task: P4GTask) -> Tuple[OracleInterface, ActionSpace]:
    if config.oracle == "synthetic":
        space = task.action_space()
        if config.synthetic_task:
            synth = SyntheticTask.load(config.synthetic_task)
        else:
            synth = random_task(len(space), random.Random(config.search.rng_seed))
        return SyntheticOracle(synth), space
    if config.oracle == "llm":
        from .llm import LLMClient, LLMOracle

        client = LLMClient(config.endpoint, cache_dir=config.cache_dir)
        oracle = LLMOracle(client=client, model=config.model, task=task,
                           gen_temperature=config.search.temp_gen)
        return oracle, task.action_space()
    raise ValueError(f"unknown oracle kind {config.oracle!r}")


def serialize_plan(result: PlanResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True)


def _print_plan(result: PlanResult, space: ActionSpace) -> None:
    print(f"chosen act: {space[result.chosen_act].name}")
    print(f"utterance:  {result.chosen_utterance}")
    print(f"{'act':<26}{'N':>6}{'Q':>10}{'prior':>10}")
    for act in space:
        print(f"{act.name:<26}{result.per_act_visits[act.id]:>6}"
              f"{result.per_act_q[act.id]:>10.4f}"
              f"{result.root_prior.probs[act.id]:>10.4f}")
    print(f"simulations: {result.simulations_run}, "
          f"oracle calls: {result.oracle_call_count}")


def cmd_plan(config: AppConfig, history_path: str) -> int:
    task = _load_task(config)
    oracle, space = _build_oracle(config, task)
    with open(history_path, encoding="utf-8") as fh:
        record = json.load(fh)
    _, history = history_from_record(record, space)
    result = search(history, config.search, oracle, space)
    _print_plan(result, space)
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(serialize_plan(result) + "\n")
    return 0


def _transcript_record(history: DialogueHistory, space: ActionSpace,
                       dialog_id: str, config: AppConfig,
                       plans: List[PlanResult]) -> dict:
    record = history_to_record(history, space, dialog_id)
    record["planner"] = config.oracle
    record["config"] = config.search.to_dict()
    record["per_turn_plan"] = [p.to_dict() for p in plans]
    return record


def cmd_chat(config: AppConfig, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    task = _load_task(config)
    oracle, space = _build_oracle(config, task)
    history = DialogueHistory()
    plans: List[PlanResult] = []

    def plan_turn() -> Optional[PlanResult]:
        for attempt in range(2):
            try:
                return search(history, config.search, oracle, space)
            except (OracleError, SearchError) as exc:
                log.warning("oracle failure during chat: %s", exc)
                print("Sorry, something went wrong on my side.", file=stdout)
        return None

    while True:
        result = plan_turn()
        if result is None:
            break
        plans.append(result)
        history = history.append(system_turn(result.chosen_act, result.chosen_utterance))
        print(f"Persuader: {result.chosen_utterance}", file=stdout)
        line = stdin.readline()
        if not line:
            break
        line = line.rstrip("\n")
        if line.strip() == "/quit":
            break
        if line.strip() == "/stats":
            print(serialize_plan(result), file=stdout)
            line = stdin.readline()
            if not line or line.rstrip("\n").strip() == "/quit":
                break
            line = line.rstrip("\n")
        # bracketed prefixes in human input are literal text, never labels
        history = history.append(user_turn(line))

    if config.output:
        record = _transcript_record(history, space, "chat", config, plans)
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")
    return 0


def cmd_selfplay(config: AppConfig, episodes: int, turn_cap: int) -> int:
    if episodes < 1 or turn_cap < 1:
        raise ValueError("episodes and turn cap must be positive")
    task = _load_task(config)
    oracle, space = _build_oracle(config, task)
    records = []
    for episode in range(episodes):
        cfg = dataclasses.replace(config.search,
                                  rng_seed=config.search.rng_seed + episode)
        rng = random.Random(cfg.rng_seed ^ 0x5E1F)
        history = DialogueHistory()
        plans: List[PlanResult] = []
        try:
            for _ in range(turn_cap):
                result = search(history, cfg, oracle, space)
                plans.append(result)
                history = history.append(
                    system_turn(result.chosen_act, result.chosen_utterance))
                reaction, text = oracle.generate_user_turn(history, rng)
                history = history.append(user_turn(text, reaction))
        except OracleError as exc:
            log.warning("episode %d failed: %s", episode, exc)
            continue
        records.append(_transcript_record(history, space, f"selfplay-{episode}",
                                          config, plans))
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record) + "\n")
    print(f"completed {len(records)}/{episodes} episodes")
    return 0


def _make_planner(kind: str, config: AppConfig, oracle: OracleInterface,
                  space: ActionSpace):
    rng = random.Random(config.search.rng_seed)

    if kind == "search":
        def planner(context: DialogueHistory) -> str:
            return search(context, config.search, oracle, space).chosen_utterance
    elif kind == "direct":
        def planner(context: DialogueHistory) -> str:
            acts = oracle.sample_prior_acts(context, config.search.prior_samples,
                                            config.search.temp_prior, rng)
            counts = [acts.count(a) for a in range(len(space))]
            best = max(range(len(space)), key=lambda a: (counts[a], -a))
            return oracle.generate_system_utterance(context, best, rng)
    else:
        raise ValueError(f"unknown planner kind {kind!r}")
    return planner


def cmd_eval_static(config: AppConfig, corpus_path: str, planner_a: str,
                    planner_b: str, judge_kind: str, runs: int,
                    truncate: Optional[int]) -> int:
    task = _load_task(config)
    oracle, space = _build_oracle(config, task)
    corpus = load_corpus(corpus_path, space)
    if judge_kind == "stub":
        judge = stub_judge_first_option
    elif judge_kind == "llm":
        from .llm import LLMClient

        client = LLMClient(config.endpoint, cache_dir=config.cache_dir)
        judge = make_llm_judge(client, config.model)
    else:
        raise ValueError(f"unknown judge kind {judge_kind!r}")
    rng = random.Random(config.search.rng_seed)
    report = run_static_eval(
        corpus,
        _make_planner(planner_a, config, oracle, space),
        _make_planner(planner_b, config, oracle, space),
        judge, rng, runs=runs, truncate=truncate, task=task)
    print(f"win rate: {report.mean:.2%} +/- {report.std:.2%} over {runs} run(s)")
    print(f"wins={report.wins} losses={report.losses} ties={report.ties} "
          f"skipped={report.skipped}")
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    return 0


def cmd_analyze(config: AppConfig, transcripts_path: str) -> int:
    sequences: List[List[str]] = []
    with open(transcripts_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            acts = [t["act"] for t in record["turns"] if t["speaker"] == "system"]
            sequences.append(acts)
    histogram = da_distribution(sequences)
    for bucket, freqs in histogram.items():
        print(f"turns {bucket}:")
        for act, freq in freqs.items():
            print(f"  {act:<26}{freq:.3f}")
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            json.dump(histogram, fh, indent=2)
    return 0


_SEARCH_OVERRIDES = [f.name for f in dataclasses.fields(SearchConfig)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialplan",
                                     description="Open-loop MCTS dialogue policy planner")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the search RNG seed")
    parser.add_argument("--oracle", choices=["synthetic", "llm"])
    parser.add_argument("--cache-dir")
    parser.add_argument("--output")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--synthetic-task", help="synthetic task JSON file")
    parser.add_argument("--task-assets", help="prompt asset directory")
    for name in _SEARCH_OVERRIDES:
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, dest=f"search_{name}", default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    plan = sub.add_parser("plan", help="plan a single turn for a history file")
    plan.add_argument("history", help="dialogue record JSON file")

    sub.add_parser("chat", help="interactive persuasion chat")

    selfplay = sub.add_parser("selfplay", help="batch planner-vs-simulator dialogues")
    selfplay.add_argument("--episodes", type=int, default=1)
    selfplay.add_argument("--turn-cap", type=int, default=8)

    ev = sub.add_parser("eval-static", help="pairwise judged evaluation over a corpus")
    ev.add_argument("corpus")
    ev.add_argument("--planner-a", default="search", choices=["search", "direct"])
    ev.add_argument("--planner-b", default="direct", choices=["search", "direct"])
    ev.add_argument("--judge", default="llm", choices=["llm", "stub"])
    ev.add_argument("--runs", type=int, default=1)
    ev.add_argument("--truncate-sentences", type=int, default=None)

    analyze = sub.add_parser("analyze", help="dialogue act distribution analytics")
    analyze.add_argument("transcripts", help="transcript JSONL file")
    return parser


_BOOL_FIELDS = {f.name for f in dataclasses.fields(SearchConfig) if f.type == "bool"}
_INT_FIELDS = {f.name for f in dataclasses.fields(SearchConfig) if f.type == "int"}


def _coerce(name: str, raw: str):
    if name in _BOOL_FIELDS:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"invalid boolean for {name}: {raw!r}")
    if name in _INT_FIELDS:
        return int(raw)
    return float(raw)


def _resolve_config(args: argparse.Namespace) -> AppConfig:
    config = AppConfig.from_file(args.config) if args.config else AppConfig()
    for attr in ("oracle", "cache_dir", "output", "synthetic_task", "task_assets"):
        value = getattr(args, attr)
        if value is not None:
            setattr(config, attr, value)
    if args.log_level is not None:
        config.log_level = args.log_level
    overrides = {}
    for name in _SEARCH_OVERRIDES:
        raw = getattr(args, f"search_{name}")
        if raw is not None:
            overrides[name] = _coerce(name, raw)
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if overrides:
        config.search = dataclasses.replace(config.search, **overrides)
    config.search.validate()
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=getattr(logging, config.log_level.upper(), logging.INFO))
    try:
        if args.command == "plan":
            return cmd_plan(config, args.history)
        if args.command == "chat":
            return cmd_chat(config)
        if args.command == "selfplay":
            return cmd_selfplay(config, args.episodes, args.turn_cap)
        if args.command == "eval-static":
            return cmd_eval_static(config, args.corpus, args.planner_a,
                                   args.planner_b, args.judge, args.runs,
                                   args.truncate_sentences)
        if args.command == "analyze":
            return cmd_analyze(config, args.transcripts)
    except (ValueError, OSError, KeyError, SearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
