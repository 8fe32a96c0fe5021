"""Desk-scale acceptance suite.

Each criterion is a function returning a :class:`CriterionResult`; the
``accept`` subcommand and the test suite both run them.  Runtime budgets are
checked as part of a criterion.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .algorithms import (OptGuessGrid, SolverConfig, amortized_filtering,
                         amortized_filtering_full, brute_force_opt, greedy, iterative_filtering,
                         lazy_greedy)
from .bench import format_report, load_config, run_experiment
from .functions import canonical_coverage, synthesize_instance, validate_submodular
from .oracle import RoundLedger, ValueOracle
from .sampling import SampleSpec, estimate_set_value, exact_set_expectation, plan_sample_size

GREEDY_GUARANTEE = 1 - 1 / math.e
TOL = 1e-9


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number}. {self.name}: {self.detail} ({self.seconds:.1f}s)"


class SquareCardinality(ValueOracle):
    """f(S) = |S|^2: monotone but supermodular, so the validator must reject it."""

    def __init__(self, n: int):
        self.n = n

    def value(self, S) -> float:
        return float(len(S)) ** 2


def data_path(name: str) -> Path:
    return Path(str(resources.files("submod_filter") / "data" / name))


def small_fixtures(max_n: int = 10) -> list[tuple[str, ValueOracle]]:
    """Instances small enough for the exhaustive validator, all three kinds."""
    out: list[tuple[str, ValueOracle]] = [("canonical", canonical_coverage())]
    for n in (6, 8, max_n):
        out.append((f"coverage{n}", synthesize_instance("coverage", n, {"density": 0.25}, seed=n)))
        out.append((f"facility{n}", synthesize_instance("facility", n, {}, seed=n)))
    for p in (0.5, 1.0):
        out.append((f"concave{max_n}_p{p}",
                    synthesize_instance("concave_modular", max_n, {"p": p}, seed=1)))
    return out


def opt_fixtures(count: int = 30, seed: int = 0) -> list[tuple[str, ValueOracle, int]]:
    """(id, instance, k) with n <= 14 and k <= 5, cycling through the kinds."""
    rng = np.random.default_rng(seed)
    out = [("canonical", canonical_coverage(), 2)]
    kinds = ("coverage", "facility", "concave_modular")
    i = 0
    while len(out) < count:
        kind = kinds[i % 3]
        n = int(rng.integers(6, 15))
        k = int(rng.integers(2, 6))
        params = {"density": 0.2} if kind == "coverage" else {}
        out.append((f"{kind}{n}_{i}", synthesize_instance(kind, n, params, seed=1000 + i), k))
        i += 1
    return out


def _timed(number, name, budget, fn) -> CriterionResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        passed = False
        detail += f"; over the {budget:.0f}s budget"
    return CriterionResult(number, name, passed, detail, dt)


def criterion_1() -> CriterionResult:
    def run():
        bad = [fid for fid, f in small_fixtures() if not validate_submodular(f, "exhaustive").ok]
        planted = validate_submodular(SquareCardinality(6), "exhaustive")
        ok = not bad and not planted.ok
        return ok, (f"{len(small_fixtures())} fixtures clean, failures {bad}; planted |S|^2 "
                    f"flagged with {len(planted.violations)} reported violations")
    return _timed(1, "submodularity validator", 10, run)


def criterion_2(trials: int = 1000) -> CriterionResult:
    def run():
        f = canonical_coverage()
        X = f.ground_set
        exact = exact_set_expectation(f, X, frozenset(), 2, RoundLedger()).value
        m = plan_sample_size(6, 0.5, 0.05)
        hits = 0
        for seed in range(trials):
            est = estimate_set_value(f, X, frozenset(), SampleSpec(2, m, seed), RoundLedger())
            hits += abs(est.value - exact) <= 0.5
        return hits >= 0.95 * trials, f"m={m}, {hits}/{trials} within 0.5 of {exact:g}"
    return _timed(2, "estimator concentration", 30, run)


def shrink_violations(record, eps: float) -> list[tuple[int, int]]:
    """Discard steps with |X_next| >= |X| / (1 + eps/2), checked in exact arithmetic."""
    q = 1 + Fraction(str(eps)) / 2
    return [(a, b) for a, b in record.steps if b * q >= a]


def criterion_3(count: int = 20) -> CriterionResult:
    eps = 0.2

    def run():
        steps = partial = violations = inexact = 0
        for i in range(count):
            n = 16 + i % 9
            t = 1 + i % 3
            r = 2 + i % 3
            k = t * r
            f = synthesize_instance("coverage", n, {"density": 0.15}, seed=300 + i)
            g = greedy(f, k).value
            # the shrink holds for any v*; an OPT upper bound makes the filter discard hardest
            for v_star in (g, 1.1 * g, g / GREEDY_GUARANTEE):
                for solver in (iterative_filtering, amortized_filtering):
                    res = solver(f, SolverConfig(k=k, eps=eps, r=r, t=t, seed=i), v_star)
                    inexact += bool(res.warnings)
                    for fr in (fr for ep in res.trace for fr in ep.filters):
                        steps += fr.iterations
                        partial += sum(b > 0 for _, b in fr.steps)
                        violations += len(shrink_violations(fr, eps))
        ok = violations == 0 and partial > 0 and inexact == 0
        return ok, (f"{steps} discard iterations checked ({partial} with survivors), "
                    f"{violations} violations")
    return _timed(3, "shrink per filter iteration", 60, run)


def criterion_4() -> CriterionResult:
    eps = 0.2

    def run():
        fails = []
        fixtures = opt_fixtures()
        for fid, f, k in fixtures:
            opt = brute_force_opt(f, k)[1]
            res = amortized_filtering(f, SolverConfig(k=k, eps=eps), opt)
            if res.value < (GREEDY_GUARANTEE - eps) * opt - TOL:
                fails.append(fid)
        passed = len(fixtures) - len(fails)
        return not fails, f"{passed}/{len(fixtures)} reach (1-1/e-{eps})·OPT, failing {fails}"
    return _timed(4, "approximation, exact mode", 120, run)


def criterion_5(seeds: int = 20) -> CriterionResult:
    eps, delta, m = 0.25, 0.05, 500

    def run():
        hits = total = 0
        for fid, f, k in opt_fixtures(10, seed=5):
            opt = brute_force_opt(f, k)[1]
            for seed in range(seeds):
                res = amortized_filtering_full(
                    f, SolverConfig(k=k, eps=eps, mode="sampled", m=m, delta=delta, seed=seed))
                hits += res.value >= (GREEDY_GUARANTEE - eps) * opt - TOL
                total += 1
        return hits >= 0.9 * total, f"{hits}/{total} runs reach (1-1/e-{eps})·OPT"
    return _timed(5, "approximation, full sampled pipeline", 600, run)


def scaling_run(n: int, eps: float = 0.2, m: int = 200, seed: int = 0):
    """Greedy and exact-mode amortized filtering on one synthetic coverage instance."""
    f = synthesize_instance("coverage", n, {"universe": 2 * n, "density": 4 / n}, seed=n)
    k = n // 4
    g = greedy(f, k)
    r = max(1, math.ceil(math.log2(n)))
    res = amortized_filtering(f, SolverConfig(k=k, eps=eps, r=r, m=m, seed=seed), g.value)
    return g, res


def round_bound(n: int, eps: float, r: int) -> float:
    return 20 / eps * (2 * math.ceil(math.log(n) / math.log1p(eps / 2) - 1e-9) + 1) + r


def criterion_6(sizes=(64, 256, 1024)) -> CriterionResult:
    eps = 0.2

    def run():
        bad_greedy = [fid for fid, f, k in opt_fixtures(10, seed=6) if greedy(f, k).rounds != k]
        af_rounds, g_rounds, over = [], [], []
        for n in sizes:
            g, res = scaling_run(n, eps)
            af_rounds.append(res.rounds)
            g_rounds.append(g.rounds)
            if res.rounds > round_bound(n, eps, res.config.r):
                over.append(n)
        logn = np.log(sizes)
        af_slope = float(np.polyfit(logn, np.log(af_rounds), 1)[0])
        g_slope = float(np.polyfit(logn, np.log(g_rounds), 1)[0])
        ok = (not bad_greedy and not over and af_slope < 1
              and g_rounds == [n // 4 for n in sizes])
        return ok, (f"greedy rounds == k on all fixtures: {not bad_greedy}; "
                    f"amortized rounds {af_rounds} (slope {af_slope:.2f}, over bound at {over}) "
                    f"vs greedy {g_rounds} (slope {g_slope:.2f})")
    return _timed(6, "adaptivity accounting", 300, run)


def criterion_7() -> CriterionResult:
    def run():
        weak = []
        for fid, f, k in opt_fixtures():
            opt = brute_force_opt(f, k)[1]
            if greedy(f, k).value < GREEDY_GUARANTEE * opt - TOL:
                weak.append(fid)
        differ = []
        kinds = ("coverage", "facility", "concave_modular")
        for i in range(20):
            f = synthesize_instance(kinds[i % 3], 40, {}, seed=700 + i)
            a, b = greedy(f, 10), lazy_greedy(f, 10)
            if a.solution != b.solution or a.value != b.value or a.rounds != b.rounds:
                differ.append(i)
        return not weak and not differ, (f"greedy below 1-1/e on {weak}; "
                                         f"lazy differs from greedy on {differ} of 20")
    return _timed(7, "classical baselines", None, run)


def criterion_8() -> CriterionResult:
    def run():
        missing = []
        checked = 0
        for fid, f, k in opt_fixtures():
            opt = brute_force_opt(f, k)[1]
            singles = [f.value(frozenset({a})) for a in range(f.n)]
            for eps in (0.1, 0.25, 0.45):
                grid = OptGuessGrid.build(max(singles), eps, f.n)
                checked += 1
                if not any(opt - TOL <= v <= (1 + eps) * opt + TOL for v in grid.values):
                    missing.append((fid, eps))
        return not missing, f"{checked - len(missing)}/{checked} grids bracket OPT"
    return _timed(8, "OPT-guess grid", None, run)


def criterion_9() -> CriterionResult:
    def run():
        cfg = load_config(data_path("example_bench.json"))
        outs = []
        with tempfile.TemporaryDirectory() as tmp:
            for i in range(2):
                path = Path(tmp) / f"report{i}.{cfg.format}"
                path.write_text(format_report(run_experiment(cfg), cfg.format))
                outs.append(path.read_bytes())
        same = outs[0] == outs[1]
        return same, f"two runs of the shipped config are {'byte-identical' if same else 'different'}"
    return _timed(9, "bench determinism", None, run)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def run_all(only=None, echo=print) -> list[CriterionResult]:
    results = []
    for i, crit in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        res = crit()
        if echo:
            echo(res.line())
        results.append(res)
    return results
