"""Filtering-based low-adaptivity solvers.

All thresholds are expressed through an estimate ``v_star`` of OPT.  In
``exact`` mode the expectations over random blocks are computed by
enumerating every size-t subset; when that exceeds the enumeration cap the
call falls back to sampling and a warning is attached to the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..oracle import RoundCapExceeded, RoundLedger, ValueOracle, evaluate_batch, marginal_batch
from ..sampling import (EnumerationCapExceeded, Estimate, SampleSpec, SeedStream,
                        estimate_marginals_all, estimate_set_value)
from .config import EpochRecord, FilterRecord, RunResult, SolverConfig, default_m


class FilterExhausted(RuntimeError):
    """Every remaining element was discarded: v_star is too high for this state."""

    def __init__(self, record: FilterRecord):
        super().__init__("filter discarded every element")
        self.record = record


@dataclass
class FilterOutcome:
    survivors: frozenset
    block: frozenset
    block_gain: float | None     # f_S(block); None only if X was empty
    base_value: float | None     # f(S)
    record: FilterRecord


class _Estimator:
    """Routes expectation queries to enumeration or sampling."""

    def __init__(self, cfg: SolverConfig, seeds: SeedStream, warnings: list[str]):
        self.cfg = cfg
        self.seeds = seeds
        self.warnings = warnings

    def _spec(self, force_sample=False) -> SampleSpec:
        seed = self.seeds.next_seed()
        if self.cfg.mode == "exact" and not force_sample:
            return SampleSpec(self.cfg.t, None, seed)
        m = self.cfg.m or default_m(self.cfg.k, self.cfg.eps, self.cfg.delta)
        return SampleSpec(self.cfg.t, m, seed)

    def _call(self, fn, oracle, X, S, ledger):
        spec = self._spec()
        try:
            return fn(oracle, X, S, spec, ledger, self.cfg.enum_cap)
        except EnumerationCapExceeded as exc:
            msg = f"exact expectation unavailable ({exc}); sampling instead"
            if msg not in self.warnings:
                self.warnings.append(msg)
            return fn(oracle, X, S, replace(self._spec(force_sample=True), seed=spec.seed),
                      ledger, self.cfg.enum_cap)

    def set_value(self, oracle, X, S, ledger) -> Estimate:
        return self._call(estimate_set_value, oracle, X, S, ledger)

    def marginals(self, oracle, X, S, ledger) -> dict[int, Estimate]:
        return self._call(estimate_marginals_all, oracle, X, S, ledger)


def _filter(oracle, X, S, v_star, cfg, ledger, est: _Estimator) -> FilterOutcome:
    S = frozenset(S)
    X = frozenset(X) - S
    rec = FilterRecord()
    if not X:
        rec.exit = "empty"
        return FilterOutcome(X, frozenset(), None, None, rec)
    while True:
        e = est.set_value(oracle, X, S, ledger)
        gap = v_star - e.base_value
        thr = (1 - cfg.eps) * gap / cfg.r
        rec.sizes.append(len(X))
        rec.set_values.append(e.value)
        rec.thresholds.append(thr)
        rec.exact.append(e.exact)
        rec.base_value = e.base_value
        if e.value >= thr:
            rec.exit = "value"
        elif len(X) <= cfg.t:
            # the only block left is X itself; discarding can only lose value
            rec.exit = "small"
        if rec.exit:
            return FilterOutcome(X, e.best_sample, e.best_gain, e.base_value, rec)

        marg = est.marginals(oracle, X, S, ledger)
        keep_thr = (1 + cfg.eps / 2) * (1 - cfg.eps) * gap / cfg.k
        survivors = frozenset(a for a, m in marg.items() if m.value >= keep_thr)
        rec.steps.append((len(X), len(survivors)))
        if not survivors:
            rec.exit = "exhausted"
            raise FilterExhausted(rec)
        if survivors == X:
            rec.exit = "stalled"
            return FilterOutcome(X, e.best_sample, e.best_gain, e.base_value, rec)
        X = survivors


def filter_elements(oracle: ValueOracle, X, S, v_star: float, config: SolverConfig,
                    ledger: RoundLedger, mode: str | None = None) -> FilterOutcome:
    """Discard low-marginal elements until a random block is worth enough.

    Each discard iteration costs two rounds (block value, then all
    marginals); the closing value round costs one more.  Returns the
    survivors and the block to add: the best enumerated or sampled block.
    """
    cfg = config.resolve(oracle.n)
    if mode is not None:
        cfg = replace(cfg, mode=mode).resolve(oracle.n)
    est = _Estimator(cfg, SeedStream(cfg.seed), [])
    return _filter(oracle, X, S, v_star, cfg, ledger, est)


def _fit_block(oracle, base, block, gain, room, ledger):
    """Trim a block to ``room`` elements, keeping the largest singleton marginals."""
    if len(block) <= room:
        return block, gain
    order = sorted(block)
    gains = marginal_batch(oracle, base, [{a} for a in order], ledger)
    ranked = sorted(zip(order, gains), key=lambda p: (-p[1], p[0]))
    return frozenset(a for a, _ in ranked[:room]), None


def _prepare(oracle, config, ledger, mode=None):
    cfg = config if mode is None else replace(config, mode=mode)
    cfg = cfg.resolve(oracle.n)
    if ledger is None:
        ledger = RoundLedger(cfg.round_cap)
    elif ledger.round_cap is None and cfg.round_cap is not None:
        ledger.round_cap = cfg.round_cap
    return cfg, ledger


def _finish(oracle, S, ledger, cfg, v_star, stop, trace, warnings, **extras) -> RunResult:
    return RunResult(
        solution=frozenset(S),
        value=float(oracle.value(frozenset(S))),   # verification query, not metered
        ledger=ledger.snapshot(),
        truncated=stop != "complete",
        stop_reason=stop,
        trace=trace,
        config=cfg,
        v_star=v_star,
        warnings=list(warnings),
        extras=extras,
    )


def iterative_filtering(oracle: ValueOracle, config: SolverConfig, v_star: float,
                        ledger: RoundLedger | None = None) -> RunResult:
    """Repeatedly filter the whole remaining ground set and add one block."""
    cfg, ledger = _prepare(oracle, config, ledger)
    warnings: list[str] = []
    est = _Estimator(cfg, SeedStream(cfg.seed), warnings)
    N = oracle.ground_set
    S: frozenset = frozenset()
    trace: list[EpochRecord] = []
    stop = "complete"
    try:
        for it in range(math.ceil(cfg.k / cfg.t)):
            if len(S) >= cfg.k or len(S) == oracle.n:
                break
            rec = EpochRecord(it, len(S))
            trace.append(rec)
            out = _filter(oracle, N - S, S, v_star, cfg, ledger, est)
            rec.filters.append(out.record)
            rec.f_start = out.base_value
            block, gain = _fit_block(oracle, S, out.block, out.block_gain, cfg.k - len(S), ledger)
            S = S | block
            rec.size_end = len(S)
            rec.f_end = None if gain is None else out.base_value + gain
    except FilterExhausted as exc:
        trace[-1].filters.append(exc.record)
        stop = "exhausted"
    except RoundCapExceeded:
        stop = "round_cap"
    return _finish(oracle, S, ledger, cfg, v_star, stop, trace, warnings)


def _amortized(oracle, cfg, v_star, ledger, est) -> tuple[frozenset, str, list[EpochRecord]]:
    N = oracle.ground_set
    S: frozenset = frozenset()
    T: frozenset = frozenset()
    f_S = None
    trace: list[EpochRecord] = []
    stop = "complete"
    edge = cfg.eps / 20
    try:
        for epoch in range(cfg.epoch_budget):
            if len(S) >= cfg.k or len(S) == oracle.n:
                break
            rec = EpochRecord(epoch, len(S), f_start=f_S)
            trace.append(rec)
            X, T = N - S, frozenset()
            f_ST = f_S
            while True:
                out = _filter(oracle, X, S | T, v_star, cfg, ledger, est)
                rec.filters.append(out.record)
                if rec.f_start is None:
                    rec.f_start = out.base_value
                block, gain = _fit_block(oracle, S | T, out.block, out.block_gain,
                                         cfg.k - len(S | T), ledger)
                T = T | block
                f_ST = None if gain is None else out.base_value + gain
                X = out.survivors - block
                if len(S | T) >= cfg.k or not X:
                    break
                target = edge * (v_star - rec.f_start)
                if cfg.literal_epoch_guard:
                    progress = est.set_value(oracle, X, S, ledger).value
                else:
                    progress = f_ST - rec.f_start
                if progress >= target:
                    break
            S, T = S | T, frozenset()
            f_S = f_ST
            rec.f_end, rec.size_end = f_S, len(S)
    except FilterExhausted as exc:
        trace[-1].filters.append(exc.record)
        stop = "exhausted"
    except RoundCapExceeded:
        stop = "round_cap"
    return S | T, stop, trace


def amortized_filtering(oracle: ValueOracle, config: SolverConfig, v_star: float,
                        ledger: RoundLedger | None = None) -> RunResult:
    """Epoch-based filtering: survivors carry over between blocks within an epoch.

    An epoch closes once the blocks added during it raise f by at least
    (eps/20)(v_star - f at epoch start), or the solution reaches k elements.
    """
    cfg, ledger = _prepare(oracle, config, ledger)
    warnings: list[str] = []
    est = _Estimator(cfg, SeedStream(cfg.seed), warnings)
    S, stop, trace = _amortized(oracle, cfg, v_star, ledger, est)
    return _finish(oracle, S, ledger, cfg, v_star, stop, trace, warnings)


def amortized_filtering_proxy(oracle: ValueOracle, v_star: float, config: SolverConfig,
                              ledger: RoundLedger | None = None,
                              seeds: SeedStream | None = None) -> RunResult:
    """Sampled amortized filtering for one guess ``v_star`` of OPT."""
    cfg, ledger = _prepare(oracle, config, ledger, mode="sampled")
    warnings: list[str] = []
    est = _Estimator(cfg, seeds or SeedStream(cfg.seed), warnings)
    S, stop, trace = _amortized(oracle, cfg, v_star, ledger, est)
    return _finish(oracle, S, ledger, cfg, v_star, stop, trace, warnings)


@dataclass(frozen=True)
class OptGuessGrid:
    base: float
    factor: float
    values: tuple[float, ...]

    @classmethod
    def build(cls, base: float, eps: float, n: int) -> "OptGuessGrid":
        """Guesses (1+eps)^i * base for i = 0..ceil(log_{1+eps} n)."""
        top = math.ceil(math.log(n) / math.log1p(eps) - 1e-9) if n > 1 else 0
        if base <= 0:
            return cls(0.0, 1 + eps, (0.0,))
        return cls(base, 1 + eps, tuple(base * (1 + eps) ** i for i in range(top + 1)))


def amortized_filtering_full(oracle: ValueOracle, config: SolverConfig,
                             ledger: RoundLedger | None = None) -> RunResult:
    """Run the sampled proxy for every OPT guess and keep the best solution.

    One round queries all singletons.  The guesses are independent, so their
    rounds run in lockstep: global round j carries round j of every guess.  A
    final round queries every guess's solution to pick the best.
    """
    cfg, ledger = _prepare(oracle, config, ledger, mode="sampled")
    n = oracle.n
    try:
        singles = evaluate_batch(oracle, [{a} for a in range(n)], ledger)
    except RoundCapExceeded:
        return _finish(oracle, frozenset(), ledger, cfg, None, "round_cap", [], [])
    a_star = max(range(n), key=lambda a: (singles[a], -a))
    grid = OptGuessGrid.build(singles[a_star], cfg.eps, n)

    sub_cap = None
    if ledger.round_cap is not None:
        sub_cap = max(0, ledger.round_cap - ledger.rounds - 1)
    runs, subs = [], []
    for i, v in enumerate(grid.values):
        sub = RoundLedger(sub_cap)
        est = _Estimator(cfg, SeedStream(cfg.seed, i), [])
        S, stop, trace = _amortized(oracle, cfg, v, sub, est)
        runs.append((v, S, stop, trace, est.warnings))
        subs.append(sub)
    ledger.absorb_lockstep(subs)

    stop = "complete"
    try:
        vals = evaluate_batch(oracle, [S for _, S, *_ in runs], ledger)
    except RoundCapExceeded:
        stop = "round_cap"
        vals = [0.0] * len(runs)
    best = max(range(len(runs)), key=lambda i: (vals[i], -i))
    v, S, sub_stop, trace, warnings = runs[best]
    if stop == "complete" and any(r[2] == "round_cap" for r in runs):
        stop = "round_cap"
    guesses = [{"v_star": r[0], "value": vals[i], "rounds": subs[i].rounds,
                "stop_reason": r[2]} for i, r in enumerate(runs)]
    return _finish(oracle, S, ledger, cfg, v, stop, trace, warnings,
                   a_star=a_star, grid=list(grid.values), guesses=guesses, best_guess=best)
