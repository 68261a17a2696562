"""Command-line front end: single runs, alpha sweeps, and trace reports.

Run configuration is a JSON document; traces are JSON-lines files written
append-per-observation so a crash always leaves a parseable prefix. All
output is plain text (nothing is colorized, so NO_COLOR needs no special
handling).

Config schema::

    {
      "space": [
        {"name": "x1", "kind": "continuous", "lo": 0.0, "hi": 1.0, "scale": "linear"},
        {"name": "n", "kind": "integer", "lo": 1, "hi": 64},
        {"name": "model", "kind": "categorical", "labels": ["a", "b"]},
        {"name": "train_fraction", "kind": "fraction", "values": [0.2, 0.4, 0.6, 0.8, 1.0]}
      ],
      "objective": {"synthetic": {"name": "saturating", "noise_std": 0.01, "seed": 7}}
                   or {"external": {"command": ["python3", "trainer.py"], "timeout": 600}},
      "settings": {"alpha": 0.5, "iterations": 20, "init_count": 3,
                   "candidate_max": 4096, "seed": 42, "t_ref": "auto"},
      "output_path": "runs/trace.jsonl"
    }

Trace format: one JSON object per line,
``{"round": int, "config": {...}, "accuracy": x, "seconds": x, "sigma": x,
"t_ref": x, "timestamp": iso8601}`` followed by a final
``{"selected": {...}, "alpha": x, "tradeoff": x}`` line.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence, TextIO

from .acquisition import TradeoffSettings
from .loop import Observation, ObjectiveFailureError, RunResult, run, tradeoff_value
from .objectives import SynthSpec, eval_external, eval_synthetic
from .space import Configuration, SearchSpace, config_to_dict, space_from_json

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_ALPHAS = (0.1, 0.3, 0.5, 0.7, 0.9)
REPORT_HEADER = ["alpha", "trace", "accuracy", "minutes", "sigma", "tradeoff"]
SWEEP_HEADER = ["alpha", "config", "accuracy", "minutes", "sigma", "tradeoff"]

EXIT_OK = 0
EXIT_OBJECTIVE_FAILURE = 1
EXIT_CONFIG_ERROR = 2

_FIXED_CLOCK_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class ConfigError(ValueError):
    """The run-config file is unreadable or violates the schema."""


class TraceParseError(ValueError):
    """A trace file contains a line that is not valid JSON."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Exactly one of `synthetic` or `external` is set."""

    synthetic: Optional[SynthSpec] = None
    external_command: Optional[tuple[str, ...]] = None
    external_timeout: float = 600.0


@dataclass(frozen=True)
class RunConfig:
    space: SearchSpace
    objective: ObjectiveSpec
    settings: TradeoffSettings
    output_path: Optional[str]


def _settings_from_dict(obj: dict) -> TradeoffSettings:
    known = {"alpha", "iterations", "init_count", "candidate_max", "seed", "t_ref"}
    extra = set(obj) - known
    if extra:
        raise ConfigError(f"unknown settings keys: {sorted(extra)}")
    settings = TradeoffSettings(
        alpha=obj.get("alpha", 0.0),
        iterations=obj.get("iterations", 20),
        init_count=obj.get("init_count", 3),
        candidate_max=obj.get("candidate_max", 4096),
        seed=obj.get("seed", 0),
        t_ref=obj.get("t_ref", "auto"),
    )
    settings.validate()
    return settings


def _objective_from_dict(obj: dict) -> ObjectiveSpec:
    variants = [k for k in ("synthetic", "external") if k in obj]
    if len(variants) != 1:
        raise ConfigError(
            f'objective must contain exactly one of "synthetic" or "external", got {sorted(obj)}'
        )
    if variants[0] == "synthetic":
        spec = obj["synthetic"]
        return ObjectiveSpec(
            synthetic=SynthSpec(
                name=spec["name"],
                noise_std=spec.get("noise_std", 0.0),
                seed=spec.get("seed", 0),
            )
        )
    spec = obj["external"]
    command = spec.get("command")
    if not isinstance(command, list) or not command or not all(isinstance(c, str) for c in command):
        raise ConfigError('external objective needs "command": a non-empty list of strings')
    timeout = spec.get("timeout", 600.0)
    if not isinstance(timeout, (int, float)) or timeout <= 0:
        raise ConfigError(f'external "timeout" must be positive seconds, got {timeout!r}')
    return ObjectiveSpec(external_command=tuple(command), external_timeout=float(timeout))


def load_run_config(path: str | Path) -> RunConfig:
    """Parse and validate a run-config file; raises ConfigError on any problem."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    for key in ("space", "objective"):
        if key not in obj:
            raise ConfigError(f'config {path} is missing "{key}"')
    try:
        space = space_from_json(obj["space"])
        objective = _objective_from_dict(obj["objective"])
        settings = _settings_from_dict(obj.get("settings", {}))
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"config {path} is invalid: {e}") from e
    output_path = obj.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError('"output_path" must be a string path')
    return RunConfig(space=space, objective=objective, settings=settings, output_path=output_path)


def build_objective(config: RunConfig, settings: TradeoffSettings):
    """Turn the config's objective declaration into the loop's callback."""
    if config.objective.synthetic is not None:
        spec = config.objective.synthetic

        def synthetic(cfg: Configuration, eval_index: int):
            return eval_synthetic(spec, cfg, eval_index)

        return synthetic

    command = config.objective.external_command
    timeout = config.objective.external_timeout

    def external(cfg: Configuration, eval_index: int):
        return eval_external(command, cfg, config.space, timeout, seed=settings.seed)

    return external


def observation_record(space: SearchSpace, obs: Observation, t_ref: float) -> dict:
    return {
        "round": obs.round_index,
        "config": config_to_dict(space, obs.config),
        "accuracy": obs.accuracy,
        "seconds": obs.seconds,
        "sigma": obs.sigma,
        "t_ref": t_ref,
        "timestamp": obs.wall_clock.isoformat(),
    }


def selected_record(space: SearchSpace, result: RunResult) -> dict:
    return {
        "selected": config_to_dict(space, result.selected),
        "alpha": result.settings.alpha,
        "tradeoff": result.selected_tradeoff,
    }


class TraceWriter:
    """Appends one JSON line per observation, flushing so crashes keep a valid prefix."""

    def __init__(self, path: str | Path, space: SearchSpace):
        self.path = Path(path)
        self.space = space
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: TextIO = open(self.path, "w")

    def on_observation(self, obs: Observation, t_ref: float) -> None:
        self._write(observation_record(self.space, obs, t_ref))

    def finish(self, result: RunResult) -> None:
        self._write(selected_record(self.space, result))

    def close(self) -> None:
        self._fh.close()

    def _write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()


def read_trace(path: str | Path) -> tuple[list[dict], Optional[dict]]:
    """All observation records plus the final selection record, if present."""
    observations: list[dict] = []
    selected: Optional[dict] = None
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise TraceParseError(f"cannot read trace {path}: {e}") from e
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceParseError(f"{path}:{lineno}: invalid JSON: {e}") from e
        if "round" in record:
            observations.append(record)
        elif "selected" in record:
            selected = record
    return observations, selected


def _execute_run(
    config: RunConfig,
    settings: TradeoffSettings,
    out_path: str | Path,
    fixed_clock: bool,
) -> RunResult:
    objective = build_objective(config, settings)
    writer = TraceWriter(out_path, config.space)
    clock = (lambda: _FIXED_CLOCK_EPOCH) if fixed_clock else None
    try:
        result = run(
            objective,
            config.space,
            settings,
            on_observation=writer.on_observation,
            clock=clock,
        )
        writer.finish(result)
    finally:
        writer.close()
    return result


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_run_config(args.config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    settings = config.settings
    if args.seed is not None:
        settings = replace(settings, seed=args.seed)
    out_path = args.out or config.output_path
    if out_path is None:
        print("error: no output path (set output_path in the config or pass --out)", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        result = _execute_run(config, settings, out_path, args.fixed_clock)
    except ObjectiveFailureError as e:
        print(f"error: {e} (partial trace kept at {out_path})", file=sys.stderr)
        return EXIT_OBJECTIVE_FAILURE
    selected = config_to_dict(config.space, result.selected)
    last = result.trace[-1]
    print(
        f"selected {json.dumps(selected)} "
        f"tradeoff={result.selected_tradeoff!r} alpha={settings.alpha!r} "
        f"t_ref={result.t_ref!r} evaluations={len(result.trace)}"
    )
    logger.info("trace written to %s (last round %d)", out_path, last.round_index)
    return EXIT_OK


def _alpha_trace_path(base: Path, alpha: float) -> Path:
    return base.with_name(f"{base.stem}-alpha{alpha:g}{base.suffix or '.jsonl'}")


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        config = load_run_config(args.config)
        alphas = _parse_alphas(args.alphas)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_base = Path(args.out or config.output_path or "sweep.jsonl")
    rows: list[dict] = []
    failed = 0
    for index, alpha in enumerate(alphas):
        settings = replace(config.settings, alpha=alpha, seed=config.settings.seed + index)
        trace_path = _alpha_trace_path(out_base, alpha)
        try:
            result = _execute_run(config, settings, trace_path, args.fixed_clock)
        except ObjectiveFailureError as e:
            print(f"error: alpha={alpha:g}: {e}", file=sys.stderr)
            rows.append({"alpha": alpha, "error": str(e)})
            failed += 1
            continue
        chosen = _selected_observation(result)
        rows.append(
            {
                "alpha": alpha,
                "config": config_to_dict(config.space, result.selected),
                "accuracy": chosen.accuracy,
                "minutes": chosen.seconds / 60.0,
                "sigma": chosen.sigma,
                "tradeoff": result.selected_tradeoff,
                "trace": str(trace_path),
            }
        )
    csv_path = out_base.with_name(f"{out_base.stem}-sweep.csv")
    _write_sweep_csv(csv_path, rows)
    for row in rows:
        if "error" in row:
            print(f"alpha={row['alpha']:g} FAILED: {row['error']}")
        else:
            print(
                f"alpha={row['alpha']:g} accuracy={row['accuracy']!r} "
                f"minutes={row['minutes']!r} trace={row['trace']}"
            )
    print(f"sweep report written to {csv_path}")
    return EXIT_OBJECTIVE_FAILURE if failed else EXIT_OK


def _selected_observation(result: RunResult) -> Observation:
    best = None
    best_value = None
    for obs in sorted(result.trace, key=lambda o: o.round_index):
        value = tradeoff_value(obs.accuracy, obs.sigma, result.settings.alpha)
        if best_value is None or value > best_value:
            best, best_value = obs, value
    assert best is not None and best.config == result.selected
    return best


def _write_sweep_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    ok_rows = [r for r in rows if "error" not in r]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for row in sorted(rows, key=lambda r: r["alpha"]):
            if "error" in row:
                writer.writerow([repr(row["alpha"]), f"ERROR: {row['error']}", "", "", "", ""])
            else:
                writer.writerow(
                    [
                        repr(row["alpha"]),
                        json.dumps(row["config"], separators=(",", ":")),
                        repr(row["accuracy"]),
                        repr(row["minutes"]),
                        repr(row["sigma"]),
                        repr(row["tradeoff"]),
                    ]
                )
        if ok_rows:
            mean_accuracy = sum(r["accuracy"] for r in ok_rows) / len(ok_rows)
            mean_minutes = sum(r["minutes"] for r in ok_rows) / len(ok_rows)
            writer.writerow(["mean", "", repr(mean_accuracy), repr(mean_minutes), "", ""])


def _parse_alphas(text: str) -> list[float]:
    try:
        alphas = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise ConfigError(f"bad --alphas value {text!r}: {e}") from e
    if not alphas:
        raise ConfigError("--alphas needs at least one value")
    if any(a < 0 for a in alphas):
        raise ConfigError("alphas must be >= 0")
    return sorted(alphas)


def _report_rows(trace_paths: Sequence[str], alpha: float) -> list[list[str]]:
    rows: list[list[str]] = []
    accs: list[float] = []
    mins: list[float] = []
    sigmas: list[float] = []
    values: list[float] = []
    for path in trace_paths:
        observations, _ = read_trace(path)
        if not observations:
            raise TraceParseError(f"trace {path} contains no observations")
        best = None
        best_value = None
        for record in observations:
            value = tradeoff_value(record["accuracy"], record["sigma"], alpha)
            if best_value is None or value > best_value:
                best, best_value = record, value
        accs.append(best["accuracy"])
        mins.append(best["seconds"] / 60.0)
        sigmas.append(best["sigma"])
        values.append(best_value)
        rows.append(
            [
                repr(alpha),
                str(path),
                repr(best["accuracy"]),
                repr(best["seconds"] / 60.0),
                repr(best["sigma"]),
                repr(best_value),
            ]
        )
    n = len(rows)
    rows.append(
        [
            repr(alpha),
            "mean",
            repr(sum(accs) / n),
            repr(sum(mins) / n),
            repr(sum(sigmas) / n),
            repr(sum(values) / n),
        ]
    )
    return rows


def cmd_report(args: argparse.Namespace) -> int:
    try:
        rows = _report_rows(args.traces, args.alpha)
    except TraceParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(REPORT_HEADER)
        writer.writerows(rows)
    else:
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(REPORT_HEADER)]
        header = "  ".join(h.ljust(w) for h, w in zip(REPORT_HEADER, widths))
        print(header)
        print("-" * len(header))
        for row in rows:
            print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tradebo",
        description="Bayesian optimization balancing model accuracy against training time.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log refits to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a single optimization run")
    run_p.add_argument("--config", required=True, help="path to the JSON run config")
    run_p.add_argument("--out", help="trace output path (overrides the config)")
    run_p.add_argument("--seed", type=int, help="override the config's seed")
    run_p.add_argument(
        "--fixed-clock",
        action="store_true",
        help="stamp observations with a constant epoch timestamp (reproducibility testing)",
    )
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run once per tradeoff weight and report")
    sweep_p.add_argument("--config", required=True, help="path to the JSON run config")
    sweep_p.add_argument(
        "--alphas",
        default=",".join(str(a) for a in DEFAULT_SWEEP_ALPHAS),
        help="comma-separated tradeoff weights (default: %(default)s)",
    )
    sweep_p.add_argument("--out", help="base path for per-alpha traces and the CSV report")
    sweep_p.add_argument("--fixed-clock", action="store_true", help=argparse.SUPPRESS)
    sweep_p.set_defaults(func=cmd_sweep)

    report_p = sub.add_parser("report", help="re-select from existing traces at a given alpha")
    report_p.add_argument("traces", nargs="+", help="trace files to summarize")
    report_p.add_argument("--alpha", required=True, type=float, help="tradeoff weight")
    report_p.add_argument("--format", choices=("csv", "table"), default="csv")
    report_p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
