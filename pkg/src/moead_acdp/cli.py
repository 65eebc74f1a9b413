"""Batch experiment driver.

Subcommands::

    run --config FILE [--quick] [--seed S] [--jobs K] [--output-dir DIR]
    compare DIR [DIR ...] --reference ALG [--metric igd|hv] [--output FILE]
    front DIR --problem NAME [--algorithm ALG] [--select median-igd]
    list-problems
    list-algorithms

Layout of a result directory written by ``run``::

    <out>/<problem>/<alg>/run_<i>.csv   attained feasible front of run i
    <out>/metrics.json                  per-cell metric vectors (deterministic)
    <out>/manifest.json                 resolved config, its hash, seeds, paths
    <out>/timings.json                  wall-clock per run (not deterministic)

A manifest can be passed back to ``run --config`` to replay the experiment.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .constraints import COMPARATORS, make_comparator
from .core import EvaluationError
from .engine import AlgoConfig, run as run_engine
from .problems import ProblemNotFound, get_problem, list_problems
from .stats import summarize, wilcoxon_rank_sum, significance_mark

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "AlgorithmSpec",
    "ConfigError",
    "load_config",
    "cmd_run",
    "cmd_compare",
    "cmd_front",
    "main",
]

log = logging.getLogger("moead_acdp")

QUICK_PROFILE = {"N": 100, "budget": 20_000, "runs": 11}
METRICS = ("igd", "hv")
EXIT_USAGE = 2


class ConfigError(ValueError):
    """Invalid or unresolvable experiment configuration (exit status 2)."""


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    params: dict = field(default_factory=dict)
    label: str | None = None

    @property
    def key(self) -> str:
        return self.label or self.name

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "label": self.key}


@dataclass(frozen=True)
class ExperimentConfig:
    problems: tuple[str, ...]
    algorithms: tuple[AlgorithmSpec, ...]
    runs: int = 30
    seed: int = 0
    budget: int = 150_000
    output_dir: str = "results"
    N: int = 300
    T: int = 30
    generations: int | None = None
    metrics: tuple[str, ...] = METRICS

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if not self.problems:
            raise ConfigError("at least one problem is required")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.seed < 0 or self.seed + self.runs > 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for p in self.problems:
            try:
                get_problem(p)
            except ProblemNotFound as exc:
                raise ConfigError(exc.args[0]) from None
        keys = [a.key for a in self.algorithms]
        if len(set(keys)) != len(keys):
            raise ConfigError(f"duplicate algorithm labels: {keys}")
        for a in self.algorithms:
            try:
                make_comparator(a.name, **a.params)
            except KeyError as exc:
                raise ConfigError(exc.args[0]) from None
            except TypeError as exc:
                raise ConfigError(f"bad parameters for {a.name!r}: {exc}") from None
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics {sorted(unknown)}; available: {', '.join(METRICS)}")

    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.runs)]

    def algo_config(self, alg: AlgorithmSpec, seed: int) -> AlgoConfig:
        return AlgoConfig(N=self.N, T=self.T, eval_budget=self.budget, generations=self.generations,
                          comparator=alg.name, comparator_params=dict(alg.params), seed=seed)

    def to_dict(self) -> dict:
        return {
            "problems": list(self.problems),
            "algorithms": [a.to_dict() for a in self.algorithms],
            "runs": self.runs,
            "seed": self.seed,
            "budget": self.budget,
            "output_dir": self.output_dir,
            "N": self.N,
            "T": self.T,
            "generations": self.generations,
            "metrics": list(self.metrics),
        }

    def hash(self) -> str:
        """SHA-256 of the canonical config, ignoring where results are written."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(_canonical(d).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {"problems", "algorithms", "runs", "seed", "budget", "output_dir", "N", "T", "generations", "metrics"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "problems" not in d or "algorithms" not in d:
            raise ConfigError("config needs 'problems' and 'algorithms'")
        algs = []
        for a in d.pop("algorithms"):
            if isinstance(a, str):
                algs.append(AlgorithmSpec(a))
            else:
                algs.append(AlgorithmSpec(a["name"], dict(a.get("params", {})), a.get("label")))
        problems = d.pop("problems")
        if isinstance(problems, str):
            problems = [problems]
        metrics = tuple(d.pop("metrics", METRICS))
        return cls(problems=tuple(problems), algorithms=tuple(algs), metrics=metrics, **d)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def load_config(path: str | os.PathLike, *, quick: bool = False, seed: int | None = None,
                output_dir: str | None = None) -> tuple[ExperimentConfig, bool]:
    """Read a JSON/TOML config or a manifest; returns ``(config, from_manifest)``.

    A manifest is replayed verbatim: ``--quick`` is ignored for it and only
    the output directory may be overridden.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode())
        else:
            data = json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    from_manifest = isinstance(data, dict) and "config_hash" in data and "config" in data
    if from_manifest:
        cfg = dict(data["config"])
        if seed is not None:
            log.warning("--seed ignored when replaying a manifest")
    else:
        cfg = dict(data)
        if quick:
            cfg.update(QUICK_PROFILE)
        if seed is not None:
            cfg["seed"] = seed
    if output_dir is not None:
        cfg["output_dir"] = output_dir
    try:
        config = ExperimentConfig.from_dict(cfg)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from None
    if from_manifest and config.hash() != data["config_hash"]:
        raise ConfigError("manifest config does not match its recorded hash")
    return config, from_manifest


# ---------------------------------------------------------------- run

@dataclass(frozen=True)
class _Task:
    problem: str
    alg: AlgorithmSpec
    index: int
    config: AlgoConfig


def _execute(task: _Task) -> dict:
    problem = get_problem(task.problem)
    try:
        result = run_engine(problem, task.config)
    except EvaluationError as exc:
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}", "generation": exc.generation,
                "subproblem": exc.subproblem}
    except (FloatingPointError, ValueError, ArithmeticError) as exc:
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}", "generation": None, "subproblem": None}
    return {
        "status": "ok",
        "F": result.archive_F,
        "X": result.archive_X,
        "metrics": result.metrics.as_dict(),
        "evaluations": result.evaluations,
        "wall_clock": result.wall_clock,
    }


def _write_archive(path: Path, F: np.ndarray, X: np.ndarray | None = None):
    path.parent.mkdir(parents=True, exist_ok=True)
    m = F.shape[1]
    header = [f"f{i + 1}" for i in range(m)]
    if X is not None:
        header += [f"x{i + 1}" for i in range(X.shape[1])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(F)):
            row = F[i].tolist() + (X[i].tolist() if X is not None else [])
            w.writerow([repr(float(v)) for v in row])


def _read_archive(path: Path) -> np.ndarray:
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    m = sum(1 for h in header if h.startswith("f"))
    return np.array([[float(v) for v in r[:m]] for r in rows[1:]], dtype=float).reshape(-1, m)


def _dump_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_run(config: ExperimentConfig, jobs: int = 1) -> int:
    """Execute every (problem, algorithm, run) cell and persist the results.

    Returns 0 when every run finished and 1 when some run recorded an error.
    """
    out = Path(config.output_dir)
    tasks = [_Task(p, a, i, config.algo_config(a, seed))
             for p in config.problems for a in config.algorithms for i, seed in enumerate(config.seeds())]
    log.info("running %d tasks with %d worker(s) into %s", len(tasks), jobs, out)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, tasks, chunksize=1))
    else:
        results = [_execute(t) for t in tasks]

    metrics: dict = {}
    timings: dict = {}
    runs_meta = []
    failures = 0
    for task, res in zip(tasks, results):
        cell = metrics.setdefault(task.problem, {}).setdefault(task.alg.key, {
            "algorithm": task.alg.to_dict(), "seeds": [], "status": [], "errors": {},
            **{name: [] for name in config.metrics}, "archive_size": [],
        })
        rel = Path(task.problem) / task.alg.key / f"run_{task.index}.csv"
        cell["seeds"].append(task.config.seed)
        cell["status"].append(res["status"])
        entry = {"problem": task.problem, "algorithm": task.alg.key, "run": task.index,
                 "seed": task.config.seed, "status": res["status"]}
        if res["status"] == "ok":
            _write_archive(out / rel, res["F"], res["X"])
            for name in config.metrics:
                cell[name].append(res["metrics"][name])
            cell["archive_size"].append(res["metrics"]["archive_size"])
            cell["reference_point"] = res["metrics"]["reference_point"]
            cell["reference_front"] = res["metrics"]["reference_front"]
            entry["archive"] = rel.as_posix()
            timings.setdefault(task.problem, {}).setdefault(task.alg.key, []).append(res["wall_clock"])
        else:
            failures += 1
            for name in config.metrics:
                cell[name].append(None)
            cell["archive_size"].append(None)
            cell["errors"][str(task.index)] = {k: res[k] for k in ("error", "generation", "subproblem")}
            entry["error"] = res["error"]
            log.error("%s/%s run %d failed: %s", task.problem, task.alg.key, task.index, res["error"])
        runs_meta.append(entry)

    _dump_json(out / "metrics.json", {"config_hash": config.hash(), "problems": metrics})
    _dump_json(out / "manifest.json", {
        "version": __version__,
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "seeds": config.seeds(),
        "runs": runs_meta,
        "metrics": "metrics.json",
        "timings": "timings.json",
    })
    _dump_json(out / "timings.json", timings)
    return 1 if failures else 0


# ---------------------------------------------------------------- compare

def _load_metrics(directory: Path) -> dict:
    path = directory / "metrics.json"
    try:
        return json.loads(path.read_text())["problems"]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _values(cell: dict, metric: str) -> list[float]:
    return [float(v) for v in cell.get(metric, []) if v is not None]


def cmd_compare(directories, reference: str, metric: str = "igd", output: str | os.PathLike = "compare.csv") -> int:
    """Write a per-problem mean/std table with rank-sum marks against ``reference``.

    Raises :class:`ConfigError` when the directories cover different problems
    or the reference algorithm is missing.
    """
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}; available: {', '.join(METRICS)}")
    dirs = [Path(d) for d in directories]
    if len(dirs) < 1:
        raise ConfigError("at least one result directory is required")
    loaded = [(d, _load_metrics(d)) for d in dirs]
    problem_sets = [set(m) for _, m in loaded]
    union = set().union(*problem_sets)
    for (d, _), ps in zip(loaded, problem_sets):
        missing = sorted(union - ps)
        if missing:
            raise ConfigError(f"problem {missing[0]!r} missing from {d}")

    # algorithm columns in directory order; clashing labels are qualified by directory
    seen: dict[str, int] = {}
    for _, m in loaded:
        for alg in next(iter(m.values())):
            seen[alg] = seen.get(alg, 0) + 1
    columns: list[tuple[str, int, str]] = []
    for idx, (d, m) in enumerate(loaded):
        for alg in next(iter(m.values())):
            label = alg if seen[alg] == 1 else f"{d.name or d.resolve().name}#{idx}/{alg}"
            columns.append((label, idx, alg))
    labels = [c[0] for c in columns]
    ref_col = next((i for i, c in enumerate(columns) if reference in (c[0], c[2])), None)
    if ref_col is None:
        raise ConfigError(f"reference algorithm {reference!r} not found; available: {', '.join(labels)}")
    if len(columns) < 2:
        raise ConfigError("need at least two algorithm result sets to compare")

    lower_better = metric == "igd"
    rows = []
    for problem in sorted(union):
        samples = []
        for _, idx, alg in columns:
            cell = loaded[idx][1][problem].get(alg)
            if cell is None:
                raise ConfigError(f"algorithm {alg!r} missing for problem {problem!r} in {dirs[idx]}")
            samples.append(_values(cell, metric))
        summaries = [summarize(s) if s and not any(math.isnan(v) for v in s) else None for s in samples]
        ref = samples[ref_col]
        means, stds, marks, pvals = [], [], [], []
        for j, (s, summ) in enumerate(zip(samples, summaries)):
            means.append("" if summ is None else repr(summ.mean))
            stds.append("" if summ is None else repr(summ.std))
            if j == ref_col or summ is None or summaries[ref_col] is None:
                marks.append("reference" if j == ref_col else "none")
                pvals.append("")
                continue
            p = wilcoxon_rank_sum(s, ref)
            mb, mr = summ.median, summaries[ref_col].median
            direction = 0 if mb == mr else (1 if (mb < mr) == lower_better else -1)
            marks.append(significance_mark(p, direction))
            pvals.append(repr(p))
        valid = [(summ.mean, j) for j, summ in enumerate(summaries) if summ is not None and math.isfinite(summ.mean)]
        best = set()
        if valid:
            target = min(v for v, _ in valid) if lower_better else max(v for v, _ in valid)
            best = {j for v, j in valid if v == target}
        rows += [
            [problem, "mean", *means],
            [problem, "std", *stds],
            [problem, "p", *pvals],
            [problem, "mark", *marks],
            [problem, "best", *["*" if j in best else "" for j in range(len(columns))]],
        ]
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["problem", "row", *labels])
        w.writerows(rows)
    log.info("wrote %s", out)
    return 0


# ---------------------------------------------------------------- front

def _select_run(cell: dict, select: str) -> int | None:
    ok = [i for i, s in enumerate(cell["status"]) if s == "ok"]
    if not ok:
        return None
    if select.startswith("run:"):
        i = int(select[4:])
        if i not in ok:
            raise ConfigError(f"run {i} has no archive")
        return i
    igds = cell.get("igd")
    if not igds:
        raise ConfigError("selection by IGD needs IGD values in metrics.json")
    # NaN/inf sort last; ties resolved by run index
    order = sorted(ok, key=lambda i: (math.isnan(igds[i]), igds[i], i))
    if select == "median-igd":
        return order[(len(order) - 1) // 2]
    if select == "best-igd":
        return order[0]
    raise ConfigError(f"unknown selection {select!r}; use median-igd, best-igd or run:<i>")


def cmd_front(directory, problem: str, select: str = "median-igd", algorithm: str | None = None,
              output_dir: str | os.PathLike | None = None) -> list[Path]:
    """Emit plot-ready CSVs: the selected run's front per algorithm and the reference front."""
    directory = Path(directory)
    metrics = _load_metrics(directory)
    if problem not in metrics:
        raise ConfigError(f"problem {problem!r} not in {directory}; available: {', '.join(sorted(metrics))}")
    prob = get_problem(problem)
    algs = [algorithm] if algorithm else list(metrics[problem])
    out = Path(output_dir) if output_dir else directory / problem
    written = []
    for alg in algs:
        cell = metrics[problem].get(alg)
        if cell is None:
            raise ConfigError(f"algorithm {alg!r} not found for {problem!r}")
        idx = _select_run(cell, select)
        F = np.empty((0, prob.m)) if idx is None else _read_archive(directory / problem / alg / f"run_{idx}.csv")
        path = out / f"front_{alg}_{select.replace(':', '')}.csv"
        _write_archive(path, F)
        written.append(path)
    if prob.front_candidates is not None:
        path = out / "reference_front.csv"
        _write_archive(path, prob.reference_front().points)
        written.append(path)
    return written


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="moead-acdp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute an experiment config or replay a manifest")
    r.add_argument("--config", required=True)
    r.add_argument("--quick", action="store_true", help="desk profile: N=100, budget=20000, runs=11")
    r.add_argument("--seed", type=int, help="base seed (run i uses seed + i)")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--output-dir")

    c = sub.add_parser("compare", help="tabulate mean/std and rank-sum marks")
    c.add_argument("dirs", nargs="+")
    c.add_argument("--reference", required=True)
    c.add_argument("--metric", default="igd", choices=METRICS)
    c.add_argument("--output", default="compare.csv")

    f = sub.add_parser("front", help="emit attained and reference fronts as CSV")
    f.add_argument("dir")
    f.add_argument("--problem", required=True)
    f.add_argument("--algorithm")
    f.add_argument("--select", default="median-igd")
    f.add_argument("--output-dir")

    sub.add_parser("list-problems")
    sub.add_parser("list-algorithms")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            if args.seed is not None and not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            config, _ = load_config(args.config, quick=args.quick, seed=args.seed, output_dir=args.output_dir)
            return cmd_run(config, jobs=args.jobs)
        if args.command == "compare":
            return cmd_compare(args.dirs, args.reference, args.metric, args.output)
        if args.command == "front":
            for p in cmd_front(args.dir, args.problem, args.select, args.algorithm, args.output_dir):
                print(p)
            return 0
        if args.command == "list-problems":
            for name in list_problems():
                p = get_problem(name)
                print(f"{name}\tn={p.n}\tm={p.m}\t{p.description}")
            return 0
        if args.command == "list-algorithms":
            for name, cls in COMPARATORS.items():
                print(f"{name}\t{_canonical(cls().params())}")
            return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
