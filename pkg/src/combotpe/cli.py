"""Experiment harness: multi-seed runs, b ablation, and summary tables.

Usage::

    combotpe run configs/benchmark.yaml [--seed-offset N]
    combotpe ablation configs/ablation.yaml [--seed-offset N]
    combotpe summarize results/benchmark/trials.jsonl --out summary.csv
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

import yaml

from combotpe.bench import make_problem, problem_label, validate_descriptor
from combotpe.sampler import TpeConfig, run_study

logger = logging.getLogger("combotpe")

OPTIMIZERS = ("random", "tpe", "metric-tpe", "metric-tpe-nomod")
_OVERRIDE_KEYS = {"n_startup", "n_candidates", "b"}
_TOP_KEYS = {"budget", "seeds", "n_seeds", "output_dir", "workers", "problems", "optimizers", "ablation"}

LOG_NAME = "trials.jsonl"
SUMMARY_NAME = "summary.csv"
ABLATION_LOG_NAME = "ablation_trials.jsonl"
ABLATION_SUMMARY_NAME = "ablation_summary.csv"
SUMMARY_HEADER = ("optimizer", "problem", "trial", "mean_best", "std_err")


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    pass


class InconsistentSeedsError(ValueError):
    pass


def format_float(x: float) -> str:
    """17 significant digits, always recognisable as a float."""
    s = format(float(x), ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


# -- records ----------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    run_id: str
    optimizer: str
    problem: dict
    seed: int
    trial: int
    params: tuple
    value: float
    best_value: float

    def to_json(self) -> str:
        params = ", ".join(
            format_float(v) if isinstance(v, float) else str(int(v)) for v in self.params
        )
        problem = ", ".join(
            f"{json.dumps(k)}: {json.dumps(v)}" for k, v in self.problem.items()
        )
        return (
            f'{{"run_id": {json.dumps(self.run_id)}, "optimizer": {json.dumps(self.optimizer)}, '
            f'"problem": {{{problem}}}, "seed": {self.seed}, "trial": {self.trial}, '
            f'"params": [{params}], "value": {format_float(self.value)}, '
            f'"best_value": {format_float(self.best_value)}}}'
        )

    @classmethod
    def from_json(cls, line: str) -> TrialRecord:
        d = json.loads(line)
        return cls(
            run_id=d["run_id"],
            optimizer=d["optimizer"],
            problem=d["problem"],
            seed=int(d["seed"]),
            trial=int(d["trial"]),
            params=tuple(d["params"]),
            value=float(d["value"]),
            best_value=float(d["best_value"]),
        )


@dataclass(frozen=True)
class SummaryRow:
    optimizer: str
    problem: str
    trial: int
    mean_best: float
    std_err: float


# -- config -----------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerSpec:
    name: str
    label: str
    config: TpeConfig
    method: str


@dataclass(frozen=True)
class ExperimentConfig:
    problems: list[dict]
    optimizers: list[OptimizerSpec]
    seeds: list[int]
    budget: int
    output_dir: Path
    workers: int = 1
    b_grid: list[float] = field(default_factory=list)
    ablation_base: TpeConfig = field(default_factory=TpeConfig)


def _optimizer_spec(name: str, overrides: Mapping[str, Any], label: str | None = None) -> OptimizerSpec:
    if name not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {name!r}; expected one of {OPTIMIZERS}")
    extra = set(overrides) - _OVERRIDE_KEYS
    if extra:
        raise ConfigError(f"optimizer {name!r}: unknown overrides {sorted(extra)}")
    flags = {
        "random": {},
        "tpe": {"metric_kernel_enabled": False},
        "metric-tpe": {},
        "metric-tpe-nomod": {"modification_enabled": False},
    }[name]
    try:
        cfg = TpeConfig(**flags, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"optimizer {name!r}: {exc}") from exc
    return OptimizerSpec(name, label or name, cfg, "random" if name == "random" else "tpe")


def parse_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")

    budget = raw.get("budget", 100)
    if not isinstance(budget, int) or budget < 1:
        raise ConfigError(f"budget must be a positive integer, got {budget!r}")

    if "seeds" in raw and "n_seeds" in raw:
        raise ConfigError("give either seeds or n_seeds, not both")
    if "seeds" in raw:
        seeds = raw["seeds"]
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("seeds must be a non-empty list of integers")
    else:
        n = raw.get("n_seeds", 10)
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"n_seeds must be a positive integer, got {n!r}")
        seeds = list(range(n))
    if len(set(seeds)) != len(seeds) or min(seeds) < 0:
        raise ConfigError("seeds must be distinct nonnegative integers")

    problems = raw.get("problems")
    if not isinstance(problems, list) or not problems:
        raise ConfigError("problems must be a non-empty list")
    try:
        problems = [validate_descriptor(p) for p in problems]
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"bad problem descriptor: {exc}") from exc

    optimizers = []
    for entry in raw.get("optimizers", [{"name": n} for n in OPTIMIZERS]):
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, Mapping) or "name" not in entry:
            raise ConfigError(f"optimizer entries need a name, got {entry!r}")
        optimizers.append(_optimizer_spec(entry["name"], entry.get("overrides") or {}))
    if len({o.label for o in optimizers}) != len(optimizers):
        raise ConfigError("optimizer names must be unique")

    workers = raw.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers!r}")

    ablation = raw.get("ablation") or {}
    b_grid = ablation.get("b_grid", [])
    if not isinstance(b_grid, list) or not all(
        isinstance(b, (int, float)) and not isinstance(b, bool) for b in b_grid
    ):
        raise ConfigError("ablation.b_grid must be a list of numbers")
    bad = [b for b in b_grid if not b > 1]
    if bad:
        raise ConfigError(f"ablation.b_grid values must be > 1, got {bad}")
    base = next((o.config for o in optimizers if o.name == "metric-tpe"), TpeConfig())

    return ExperimentConfig(
        problems=problems,
        optimizers=optimizers,
        seeds=seeds,
        budget=budget,
        output_dir=Path(raw.get("output_dir", "results")),
        workers=workers,
        b_grid=[float(b) for b in b_grid],
        ablation_base=base,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from exc
    return parse_config(raw)


# -- execution --------------------------------------------------------------


@dataclass(frozen=True)
class _Task:
    problem: dict
    spec: OptimizerSpec
    seed: int
    budget: int


def _run_task(task: _Task) -> list[TrialRecord]:
    problem = make_problem(task.problem, task.seed)
    run_id = f"{problem_label(task.problem)}/{task.spec.label}"
    try:
        trials = run_study(
            problem.space,
            problem,
            task.budget,
            task.spec.config.with_seed(task.seed),
            method=task.spec.method,
        )
    except Exception as exc:
        raise ExperimentError(
            f"problem={problem_label(task.problem)} optimizer={task.spec.label} "
            f"seed={task.seed}: {exc}"
        ) from exc
    return [
        TrialRecord(run_id, task.spec.label, dict(task.problem), task.seed, t.trial,
                    t.params, t.value, t.best_value)
        for t in trials
    ]


def _execute(tasks: Sequence[_Task], workers: int) -> Iterator[list[TrialRecord]]:
    if workers == 1:
        for t in tasks:
            yield _run_task(t)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, which keeps the log deterministic
        yield from pool.map(_run_task, tasks)


def _write_run(tasks: Sequence[_Task], workers: int, log_path: Path, summary_path: Path) -> tuple[Path, Path]:
    log_path.parent.mkdir(parents=True, exist_ok=True)
    with open(log_path, "w") as fh:
        for i, records in enumerate(_execute(tasks, workers)):
            fh.write("".join(r.to_json() + "\n" for r in records))
            fh.flush()
            t = tasks[i]
            logger.info(
                "%s %s seed=%d best=%s", problem_label(t.problem), t.spec.label, t.seed,
                format_float(records[-1].best_value),
            )
    write_summary(summarize(log_path), summary_path)
    return log_path, summary_path


def _shift(seeds: Iterable[int], offset: int) -> list[int]:
    out = [s + offset for s in seeds]
    if min(out) < 0:
        raise ConfigError(f"seed offset {offset} makes a seed negative")
    return out


def run_experiment(config: ExperimentConfig, seed_offset: int = 0) -> tuple[Path, Path]:
    """Every (problem, optimizer, seed) triple; returns (trial log, summary csv)."""
    seeds = _shift(config.seeds, seed_offset)
    tasks = [
        _Task(p, o, s, config.budget)
        for p in config.problems
        for o in config.optimizers
        for s in seeds
    ]
    out = config.output_dir
    return _write_run(tasks, config.workers, out / LOG_NAME, out / SUMMARY_NAME)


def ablation_label(b: float) -> str:
    return f"metric-tpe:b={b:g}"


def run_ablation(config: ExperimentConfig, seed_offset: int = 0) -> tuple[Path, Path]:
    """metric-tpe (modification on) once per (problem, b, seed)."""
    if not config.b_grid:
        raise ConfigError("ablation needs a non-empty ablation.b_grid")
    seeds = _shift(config.seeds, seed_offset)
    overrides = {
        "n_startup": config.ablation_base.n_startup,
        "n_candidates": config.ablation_base.n_candidates,
    }
    specs = [
        _optimizer_spec("metric-tpe", {**overrides, "b": b}, label=ablation_label(b))
        for b in config.b_grid
    ]
    tasks = [_Task(p, o, s, config.budget) for p in config.problems for o in specs for s in seeds]
    out = config.output_dir
    return _write_run(tasks, config.workers, out / ABLATION_LOG_NAME, out / ABLATION_SUMMARY_NAME)


# -- summaries --------------------------------------------------------------


def read_log(path: str | Path) -> list[TrialRecord]:
    with open(path) as fh:
        return [TrialRecord.from_json(line) for line in fh if line.strip()]


def summarize(log: str | Path | Iterable[TrialRecord]) -> list[SummaryRow]:
    """Mean and standard error of best-so-far over seeds, per trial index."""
    records = read_log(log) if isinstance(log, (str, Path)) else list(log)
    curves: dict[tuple[str, str], dict[int, dict[int, float]]] = defaultdict(lambda: defaultdict(dict))
    for r in records:
        curves[(problem_label(r.problem), r.optimizer)][r.trial][r.seed] = r.best_value

    rows = []
    for (problem, optimizer) in sorted(curves):
        by_trial = curves[(problem, optimizer)]
        seed_sets = {frozenset(v) for v in by_trial.values()}
        if len(seed_sets) != 1:
            raise InconsistentSeedsError(
                f"{optimizer} on {problem}: trials were logged for different seed sets"
            )
        for trial in sorted(by_trial):
            vals = [by_trial[trial][s] for s in sorted(by_trial[trial])]
            n = len(vals)
            mean = math.fsum(vals) / n
            if n > 1:
                var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
                se = math.sqrt(var / n)
            else:
                se = 0.0
            rows.append(SummaryRow(optimizer, problem, trial, mean, se))
    return rows


def write_summary(rows: Iterable[SummaryRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            w.writerow([r.optimizer, r.problem, r.trial, format_float(r.mean_best), format_float(r.std_err)])
    return path


def read_summary(path: str | Path) -> list[SummaryRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            SummaryRow(r["optimizer"], r["problem"], int(r["trial"]), float(r["mean_best"]), float(r["std_err"]))
            for r in reader
        ]


# -- entry point ------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="combotpe", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run every problem x optimizer x seed"),
                        ("ablation", "sweep the exploration base b")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--seed-offset", type=int, default=0)
        p.add_argument("--output-dir", type=Path, default=None)
        p.add_argument("--workers", type=int, default=None)
    p = sub.add_parser("summarize", help="mean/standard-error table from a trial log")
    p.add_argument("log")
    p.add_argument("--out", required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        if args.command == "summarize":
            write_summary(summarize(args.log), args.out)
            print(args.out)
            return 0
        config = load_config(args.config)
        changes = {}
        if args.output_dir is not None:
            changes["output_dir"] = args.output_dir
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            changes["workers"] = args.workers
        if changes:
            config = ExperimentConfig(**{**config.__dict__, **changes})
        runner = run_experiment if args.command == "run" else run_ablation
        log_path, summary_path = runner(config, seed_offset=args.seed_offset)
    except (ConfigError, ExperimentError, InconsistentSeedsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(log_path)
    print(summary_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
