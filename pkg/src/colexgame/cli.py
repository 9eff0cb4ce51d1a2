"""Command-line entry point: stimulus generation, schedules, simulation,
analysis exports, the live server, and log replay.

Exit codes: 0 success, 1 usage, 2 validation, 3 I/O. Every artifact-writing
command is a pure function of its inputs and the resolved seed, which each
run prints.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import random
import secrets
import sys
from pathlib import Path

import uvicorn

from colexgame.agents import (
    STRATEGIES,
    StrategyConfig,
    run_dyad_simulation,
    run_naming_grid,
)
from colexgame.analysis import (
    AnalysisError,
    DirectoryAnalysis,
    analyze_dyads,
    atomic_write_text,
    export_cases_csv,
    export_pair_costs_csv,
    export_summaries_csv,
    scan_log_dir,
)
from colexgame.engine import EngineError, parse_log, replay_log, write_log
from colexgame.lexicon import (
    bundled_lexicon_path,
    bundled_wordlist_path,
    load_lexicon,
    load_stimulus,
    load_wordlist,
    make_stimulus,
)
from colexgame.schedule import (
    CONDITIONS,
    build_schedule,
    pair_frequency_table,
    signals_for_condition,
    variant_for_condition,
)
from colexgame.server import ConfigError, ExperimentConfig, create_app, load_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

COEFFICIENT_NAMES = ("intercept", "condition", "round_scaled", "interaction")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse maps its own failures to exit code 2; this project reserves
    2 for validation, so usage problems raise instead."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed; omitted means a fresh random one")
    common.add_argument("--config", default=None,
                        help="TOML experiment config supplying defaults")

    parser = _Parser(prog="colexgame", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stimgen", parents=[common],
                       help="sample a stimulus bundle")
    p.add_argument("--condition", choices=CONDITIONS, default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--wordlist", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stimgen)

    p = sub.add_parser("schedule", parents=[common],
                       help="build a trial schedule for a stimulus")
    p.add_argument("--condition", choices=CONDITIONS, default=None)
    p.add_argument("--stimulus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", parents=[common],
                       help="run agent games and write their logs")
    p.add_argument("--condition", choices=CONDITIONS, default=None)
    p.add_argument("--grid", action="store_true",
                   help="naming-model sweep over strategy x signal count")
    p.add_argument("--repeats", type=int, default=20,
                   help="grid mode: runs per cell")
    p.add_argument("--strategies", default=None,
                   help="grid mode: comma-separated subset of strategies")
    p.add_argument("--dyads", type=int, default=20,
                   help="dyadic mode: number of simulated pairs")
    p.add_argument("--strategy", default="rational_full",
                   help="dyadic mode: strategy for both players")
    p.add_argument("--lexicon", default=None)
    p.add_argument("--wordlist", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common],
                       help="export analysis CSVs and a text summary")
    p.add_argument("--logs", required=True)
    p.add_argument("--include-incomplete", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", parents=[common],
                       help="run the live experiment server")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", parents=[common],
                       help="validate dyad logs through the engine")
    p.add_argument("paths", nargs="+",
                   help="log files or directories to scan")
    p.set_defaults(func=cmd_replay)

    return parser


def resolve_seed(args) -> int:
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    print(f"resolved seed: {seed}")
    return seed


def announce_deterministic() -> None:
    print("resolved seed: none (command is deterministic)")


def optional_config(args) -> ExperimentConfig | None:
    if getattr(args, "config", None):
        return load_config(args.config, env=os.environ)
    return None


def pick(flag_value, config_value, fallback):
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return config_value
    return fallback


def load_inputs(args, config: ExperimentConfig | None):
    lexicon_path = pick(args.lexicon, config and config.lexicon_path,
                        bundled_lexicon_path())
    wordlist_path = pick(args.wordlist, config and config.wordlist_path,
                         bundled_wordlist_path())
    return load_lexicon(lexicon_path), load_wordlist(wordlist_path)


def resolve_condition(args, config: ExperimentConfig | None) -> str:
    return pick(args.condition, config and config.condition, "baseline")


def csv_text(header: tuple[str, ...], rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


# --- subcommands ---


def cmd_stimgen(args) -> int:
    config = optional_config(args)
    seed = resolve_seed(args)
    condition = resolve_condition(args, config)
    lexicon, wordlist = load_inputs(args, config)
    stimulus = make_stimulus(
        lexicon,
        wordlist,
        variant_for_condition(condition),
        signals_for_condition(condition),
        seed,
    )
    atomic_write_text(args.out, stimulus.to_json())
    print(f"wrote stimulus for condition {condition} to {args.out}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    config = optional_config(args)
    seed = resolve_seed(args)
    condition = resolve_condition(args, config)
    stimulus = load_stimulus(args.stimulus)
    table = pair_frequency_table(stimulus.space, condition)
    schedule = build_schedule(table, seed)
    atomic_write_text(args.out, schedule.to_json())
    print(f"wrote {len(schedule.trials)}-round schedule to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = optional_config(args)
    seed = resolve_seed(args)
    condition = resolve_condition(args, config)
    lexicon, wordlist = load_inputs(args, config)
    out = Path(args.out)
    if args.grid:
        return simulate_grid(args, seed, condition, lexicon, wordlist, out)
    return simulate_dyads(args, seed, condition, lexicon, wordlist, out)


def simulate_grid(args, seed, condition, lexicon, wordlist, out: Path) -> int:
    if args.repeats < 1:
        raise ValueError("--repeats must be at least 1")
    strategies = STRATEGIES
    if args.strategies is not None:
        strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
        if not strategies:
            raise ValueError("--strategies names no strategies")
        unknown = [s for s in strategies if s not in STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies: {unknown}")
    stim_seed = random.Random(f"grid-stimulus:{seed}").getrandbits(63)
    stimulus = make_stimulus(
        lexicon,
        wordlist,
        variant_for_condition(condition),
        signals_for_condition(condition),
        stim_seed,
    )
    runs = run_naming_grid(
        stimulus.space,
        stimulus.signals,
        schedule_family=condition,
        repeats=args.repeats,
        seed=seed,
        strategies=strategies,
    )
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    rows = [run.manifest_row() for run in runs]
    header = tuple(rows[0].keys())
    atomic_write_text(
        out / "manifest.csv",
        csv_text(header, [{k: str(v) for k, v in row.items()} for row in rows]),
    )
    atomic_write_text(out / "stimulus.json", stimulus.to_json())
    for run in runs:
        atomic_write_text(runs_dir / f"{run.dyad_id}.jsonl",
                          write_log(run.events))
    print(f"wrote {len(runs)} naming runs to {out}")
    return EXIT_OK


def simulate_dyads(args, seed, condition, lexicon, wordlist, out: Path) -> int:
    if args.dyads < 1:
        raise ValueError("--dyads must be at least 1")
    cfg_kind = args.strategy
    n_signals = signals_for_condition(condition)
    variant = variant_for_condition(condition)
    for i in range(1, args.dyads + 1):
        mix = random.Random(f"simulate:{seed}:{condition}:{i}")
        stimulus = make_stimulus(
            lexicon, wordlist, variant, n_signals, mix.getrandbits(63)
        )
        schedule = build_schedule(
            pair_frequency_table(stimulus.space, condition),
            mix.getrandbits(63),
        )
        dyad_id = f"sim-{condition}-{i:04d}"
        cfg_a = StrategyConfig(kind=cfg_kind, n_signals=n_signals,
                               seed=mix.getrandbits(63))
        cfg_b = StrategyConfig(kind=cfg_kind, n_signals=n_signals,
                               seed=mix.getrandbits(63))
        events = run_dyad_simulation(
            stimulus, schedule, cfg_a, cfg_b, mix.getrandbits(63),
            dyad_id=dyad_id, condition=condition,
        )
        directory = out / "dyads" / dyad_id
        directory.mkdir(parents=True, exist_ok=True)
        atomic_write_text(directory / "log.jsonl", write_log(events))
        atomic_write_text(directory / "stimulus.json", stimulus.to_json())
        atomic_write_text(directory / "schedule.json", schedule.to_json())
    print(f"wrote {args.dyads} dyad logs to {out / 'dyads'}")
    return EXIT_OK


def render_summary(result: DirectoryAnalysis) -> str:
    lines = []
    included = sum(1 for s in result.summaries if s.included)
    lines.append(f"dyads analyzed: {len(result.summaries)}")
    lines.append(f"dyads included: {included}")
    lines.append(f"colexification cases: {len(result.cases)}")
    lines.append("")
    lines.append("dyad\tcondition\taccuracy\tincluded\tentropy\tcases")
    for s in sorted(result.summaries, key=lambda s: s.dyad_id):
        lines.append(
            f"{s.dyad_id}\t{s.condition}\t{s.accuracy:.3f}"
            f"\t{'yes' if s.included else 'no'}\t{s.entropy:.3f}\t{s.n_cases}"
        )
    lines.append("")
    fit = result.fit
    if fit is None:
        lines.append(
            "fixed-effects fit: not attempted "
            "(needs exactly two conditions with cases)"
        )
    else:
        lines.append(
            f"fixed-effects logistic fit "
            f"(reference condition: {fit.reference_condition})"
        )
        for name, value, se in zip(
            COEFFICIENT_NAMES,
            fit.coefficients,
            fit.standard_errors or (None,) * 4,
        ):
            se_text = "" if se is None else f"\tse={se:.4f}"
            lines.append(f"  {name}\tb={value:.4f}{se_text}")
        lines.append(
            f"  converged: {'yes' if fit.converged else 'no'}"
            f"\tseparated: {'yes' if fit.separated else 'no'}"
            f"\tcases: {fit.n_cases}"
        )
    lines.append("")
    return "\n".join(lines)


def cmd_analyze(args) -> int:
    announce_deterministic()
    logs_dir = Path(args.logs)
    if not logs_dir.exists():
        raise FileNotFoundError(f"log directory {logs_dir} does not exist")
    dyads = scan_log_dir(logs_dir, include_incomplete=args.include_incomplete)
    if not dyads:
        raise AnalysisError(f"no usable dyad logs under {logs_dir}")
    result = analyze_dyads(dyads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_cases_csv(result.cases, out / "cases.csv")
    export_summaries_csv(result.summaries, out / "summaries.csv")
    export_pair_costs_csv(result.per_dyad_scores, out / "pair_costs.csv")
    atomic_write_text(out / "summary.txt", render_summary(result))
    print(f"analyzed {len(dyads)} dyads into {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    config = load_config(args.config, env=os.environ)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if config.seed is None:
        config = dataclasses.replace(config, seed=secrets.randbits(32))
    print(f"resolved seed: {config.seed}")
    print(f"serving condition {config.condition} on "
          f"{args.host}:{config.port}")
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="warning")
    return EXIT_OK


def cmd_replay(args) -> int:
    announce_deterministic()
    paths: list[Path] = []
    for raw in args.paths:
        path = Path(raw)
        if path.is_dir():
            paths.extend(sorted(path.rglob("*.jsonl")))
        elif path.exists():
            paths.append(path)
        else:
            raise FileNotFoundError(f"no such file or directory: {path}")
    if not paths:
        raise AnalysisError("no .jsonl logs found under the given paths")
    failures = 0
    for path in paths:
        text = path.read_text(encoding="utf-8")
        try:
            events = parse_log(text)
        except (ValueError, KeyError) as exc:
            print(f"{path}: VIOLATION unparseable log: {exc}")
            failures += 1
            continue
        report = replay_log(events)
        if not report.ok:
            print(f"{path}: VIOLATION {report.violations[0]}")
            failures += 1
            continue
        rounds = len(report.state.history) if report.state else 0
        status = "ok complete" if report.complete else "ok incomplete"
        if report.dropped_out:
            status += " (dropout)"
        print(f"{path}: {status} rounds={rounds}")
    if failures:
        print(f"{failures} of {len(paths)} logs failed validation")
        return EXIT_VALIDATION
    print(f"all {len(paths)} logs replayed cleanly")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # argparse --help path
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, AnalysisError, EngineError, ValueError, KeyError) as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
