"""Experiment harness: solver x instance x seed grids and their reports.

An experiment config is a JSON document::

    {
      "instances": [
        {"id": "canonical", "path": "canonical_coverage.json"},
        {"id": "cov12", "synth": {"kind": "coverage", "n": 12, "seed": 1,
                                  "params": {"universe": 30, "density": 0.2}}}
      ],
      "solvers": [
        {"id": "greedy", "solver": "greedy", "k": 2},
        {"id": "af_full", "solver": "amortized_full", "k": 2, "eps": 0.25, "m": 500}
      ],
      "seeds": [0, 1, 2],
      "output": "report.csv",
      "format": "csv",
      "verify": {"brute_force": true, "exhaustive_submodularity": true}
    }

Relative paths are resolved against the config file's directory.  Solver
entries accept every SolverConfig field, plus ``v_star`` ("opt", "greedy" or
a number) for the solvers that need an OPT estimate.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .algorithms import (BRUTE_FORCE_CAP, RunResult, SolverConfig, amortized_filtering,
                         amortized_filtering_full, amortized_filtering_proxy,
                         brute_force_opt, greedy, iterative_filtering, lazy_greedy,
                         random_baseline)
from .functions import (EXHAUSTIVE_MAX_N, instance_from_dict, load_instance,
                        synthesize_instance, validate_submodular)
from .oracle import RoundLedger, ValueOracle

log = logging.getLogger(__name__)

SOLVERS = ("greedy", "lazy_greedy", "random", "brute_force", "iterative_filtering",
           "amortized_filtering", "amortized_proxy", "amortized_full")
NEEDS_V_STAR = ("iterative_filtering", "amortized_filtering", "amortized_proxy")
GREEDY_GUARANTEE = 1 - 1 / math.e

CSV_FIELDS = ("instance", "solver", "seed", "n", "k", "eps", "m", "value", "opt",
              "ratio", "rounds", "queries", "truncated")


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass
class InstanceSpec:
    id: str
    path: str | None = None
    synth: dict | None = None
    inline: dict | None = None

    def load(self, base_dir: Path) -> ValueOracle:
        if self.path is not None:
            return load_instance(base_dir / self.path)
        if self.synth is not None:
            s = dict(self.synth)
            return synthesize_instance(s.pop("kind"), s.pop("n"), s.pop("params", {}),
                                       s.pop("seed", 0))
        return instance_from_dict(self.inline)


@dataclass
class SolverSpec:
    id: str
    solver: str
    config: SolverConfig
    v_star: float | str | None = None


@dataclass
class ExperimentConfig:
    instances: list[InstanceSpec]
    solvers: list[SolverSpec]
    seeds: list[int] = field(default_factory=lambda: [0])
    output: str | None = None
    format: str = "csv"
    brute_force: bool = True
    exhaustive_submodularity: bool = False
    keep_going: bool = False
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "ExperimentConfig":
        known = {"instances", "solvers", "seeds", "output", "format", "verify", "keep_going"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config field(s) {sorted(unknown)}")
        instances = []
        for i, d in enumerate(doc.get("instances") or []):
            spec = InstanceSpec(d.get("id", f"instance{i}"), d.get("path"), d.get("synth"),
                                d.get("instance"))
            if sum(x is not None for x in (spec.path, spec.synth, spec.inline)) != 1:
                raise ConfigError(f"instance {spec.id!r}: give exactly one of path/synth/instance")
            instances.append(spec)
        solvers = []
        cfg_fields = {f.name for f in fields(SolverConfig)}
        for i, d in enumerate(doc.get("solvers") or []):
            d = dict(d)
            name = d.pop("solver", None)
            if name not in SOLVERS:
                raise ConfigError(f"solver {i}: expected one of {SOLVERS}, got {name!r}")
            sid = d.pop("id", name)
            v_star = d.pop("v_star", None)
            bad = set(d) - cfg_fields
            if bad or "k" not in d:
                raise ConfigError(f"solver {sid!r}: need 'k'; unknown field(s) {sorted(bad)}")
            solvers.append(SolverSpec(sid, name, SolverConfig(**d), v_star))
        if not instances:
            raise ConfigError("config needs at least one instance")
        if not solvers:
            raise ConfigError("config needs at least one solver")
        fmt = doc.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {fmt!r}")
        verify = doc.get("verify", {})
        return cls(instances, solvers, [int(s) for s in doc.get("seeds", [0])],
                   doc.get("output"), fmt, bool(verify.get("brute_force", True)),
                   bool(verify.get("exhaustive_submodularity", False)),
                   bool(doc.get("keep_going", False)), Path(base_dir))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return ExperimentConfig.from_dict(doc, path.parent)


@dataclass
class ReportRow:
    instance: str
    solver: str
    seed: int
    n: int
    k: int
    eps: float | None
    m: int | None
    value: float
    opt: float | None
    ratio: float | None
    rounds: int
    queries: int
    truncated: bool
    wall_time: float = 0.0
    config: dict | None = None


def _sig(x: float | None) -> float | None:
    return None if x is None else float(format(x, ".10g"))


def run_solver(oracle: ValueOracle, spec: SolverSpec, seed: int,
               opt: float | None = None) -> RunResult:
    cfg = replace(spec.config, seed=seed)
    name = spec.solver
    if name == "greedy":
        return greedy(oracle, cfg.k)
    if name == "lazy_greedy":
        return lazy_greedy(oracle, cfg.k)
    if name == "random":
        return random_baseline(oracle, cfg.k, seed)
    if name == "brute_force":
        S, v = brute_force_opt(oracle, cfg.k)
        return RunResult(S, v, RoundLedger())
    if name == "amortized_full":
        return amortized_filtering_full(oracle, cfg)

    v_star = spec.v_star
    if v_star is None:
        v_star = "opt" if opt is not None else "greedy"
    if v_star == "opt":
        if opt is None:
            raise ConfigError(f"solver {spec.id!r}: v_star='opt' needs brute-force OPT")
        v_star = opt
    elif v_star == "greedy":
        v_star = greedy(oracle, cfg.k).value
    v_star = float(v_star)
    if name == "iterative_filtering":
        return iterative_filtering(oracle, cfg, v_star)
    if name == "amortized_filtering":
        return amortized_filtering(oracle, cfg, v_star)
    return amortized_filtering_proxy(oracle, v_star, cfg)


def _check_row(row: ReportRow, res: RunResult, solver: str) -> list[str]:
    problems = []
    if len(res.solution) > row.k:
        problems.append(f"|solution| = {len(res.solution)} > k = {row.k}")
    if res.ledger.total_queries != sum(res.ledger.queries_per_round):
        problems.append("ledger total does not match per-round counts")
    if row.ratio is not None:
        if row.ratio > 1 + 1e-9:
            problems.append(f"ratio {row.ratio} exceeds 1")
        if solver in ("greedy", "lazy_greedy") and row.ratio < GREEDY_GUARANTEE - 1e-9:
            problems.append(f"greedy ratio {row.ratio} below 1 - 1/e")
    if solver in ("greedy", "lazy_greedy") and res.rounds != row.k:
        problems.append(f"greedy used {res.rounds} rounds, expected k = {row.k}")
    return problems


def run_experiment(config: ExperimentConfig) -> list[ReportRow]:
    """One row per (instance, solver, seed), sorted by that triple."""
    rows = []
    for ispec in config.instances:
        oracle = ispec.load(config.base_dir)
        if config.exhaustive_submodularity and oracle.n <= EXHAUSTIVE_MAX_N:
            report = validate_submodular(oracle, "exhaustive")
            if not report.ok:
                msg = f"instance {ispec.id!r}: {len(report.violations)} submodularity violation(s)"
                if not config.keep_going:
                    raise InvariantViolation(msg)
                log.warning(msg)
        opts: dict[int, float | None] = {}
        for sspec in config.solvers:
            k = sspec.config.k
            if k not in opts:
                opts[k] = None
                if config.brute_force and math.comb(oracle.n, min(k, oracle.n)) <= BRUTE_FORCE_CAP:
                    opts[k] = brute_force_opt(oracle, k)[1]
            opt = opts[k]
            for seed in config.seeds:
                t0 = time.perf_counter()
                res = run_solver(oracle, sspec, seed, opt)
                wall = time.perf_counter() - t0
                cfg = res.config
                ratio = None
                if opt is not None:
                    ratio = res.value / opt if opt > 0 else 1.0
                row = ReportRow(
                    ispec.id, sspec.id, seed, oracle.n, k,
                    _sig(cfg.eps) if cfg else None, cfg.m if cfg else None,
                    _sig(res.value), _sig(opt), _sig(ratio), res.rounds, res.queries,
                    res.truncated, wall,
                    {"solver": sspec.solver, **(cfg.to_dict() if cfg else {"k": k}),
                     "v_star": _sig(res.v_star)},
                )
                problems = _check_row(row, res, sspec.solver)
                if problems:
                    msg = f"{ispec.id}/{sspec.id}/seed {seed}: " + "; ".join(problems)
                    if not config.keep_going:
                        raise InvariantViolation(msg)
                    log.warning(msg)
                rows.append(row)
    rows.sort(key=lambda r: (r.instance, r.solver, r.seed))
    return rows


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def format_report(rows: list[ReportRow], fmt: str = "csv", timing: bool = False) -> str:
    """Render rows as CSV (fixed 13-column header) or a JSON array.

    Wall time is left out unless ``timing`` is set, so reports of the same
    config are byte-identical.
    """
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS + (("wall_time",) if timing else ()))
        for r in rows:
            cells = [_cell(getattr(r, f)) for f in CSV_FIELDS]
            if timing:
                cells.append(_cell(r.wall_time))
            w.writerow(cells)
        return buf.getvalue()
    if fmt == "json":
        out = []
        for r in rows:
            d = asdict(r)
            if not timing:
                d.pop("wall_time")
            out.append(d)
        return json.dumps(out, indent=1, sort_keys=True) + "\n"
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit_report(rows: list[ReportRow], fmt: str, path, timing: bool = False) -> Path:
    path = Path(path)
    path.write_text(format_report(rows, fmt, timing))
    return path


def load_json_report(path) -> list[ReportRow]:
    return [ReportRow(**d) for d in json.loads(Path(path).read_text())]
