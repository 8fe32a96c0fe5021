from __future__ import annotations

import heapq
import math
from itertools import combinations

import numpy as np

from ..oracle import RoundLedger, ValueOracle, evaluate_batch, marginal_batch
from .config import RunResult

BRUTE_FORCE_CAP = 2_000_000


class InstanceTooLarge(ValueError):
    pass


def _check_k(oracle, k):
    if not 0 <= k <= oracle.n:
        raise ValueError(f"k must lie in 0..{oracle.n}, got {k}")


def greedy(oracle: ValueOracle, k: int, ledger: RoundLedger | None = None) -> RunResult:
    """Add the element of largest marginal gain k times; one round per step."""
    _check_k(oracle, k)
    ledger = ledger if ledger is not None else RoundLedger()
    S: frozenset = frozenset()
    for _ in range(k):
        rest = sorted(oracle.ground_set - S)
        gains = marginal_batch(oracle, S, [{a} for a in rest], ledger)
        best = int(np.argmax(gains))   # first maximum, i.e. lowest id
        S = S | {rest[best]}
    return RunResult(S, oracle.value(S), ledger.snapshot())


def lazy_greedy(oracle: ValueOracle, k: int, ledger: RoundLedger | None = None) -> RunResult:
    """Greedy with stale upper bounds on the gains (CELF-style).

    Returns the same set as :func:`greedy`.  Each step is charged as one round
    holding however many gains it had to refresh.
    """
    _check_k(oracle, k)
    ledger = ledger if ledger is not None else RoundLedger()
    S: frozenset = frozenset()
    if k == 0:
        return RunResult(S, oracle.value(S), ledger.snapshot())
    order = list(range(oracle.n))
    gains = marginal_batch(oracle, S, [{a} for a in order], ledger)
    heap = [(-g, a, 0) for a, g in zip(order, gains)]
    heapq.heapify(heap)
    step = 0
    while step < k:
        if step > 0:
            f_S = oracle.value(S)
            refreshed = 1
            while True:
                neg, a, seen = heapq.heappop(heap)
                if seen == step:
                    break
                g = float(oracle.values_plus(S, [a])[0]) - f_S
                heapq.heappush(heap, (-g, a, step))
                refreshed += 1
            ledger.charge(refreshed)
        else:
            neg, a, seen = heapq.heappop(heap)
        S = S | {a}
        step += 1
    return RunResult(S, oracle.value(S), ledger.snapshot())


def random_baseline(oracle: ValueOracle, k: int, seed: int = 0,
                    ledger: RoundLedger | None = None) -> RunResult:
    _check_k(oracle, k)
    ledger = ledger if ledger is not None else RoundLedger()
    rng = np.random.default_rng(seed)
    S = frozenset(rng.choice(oracle.n, size=k, replace=False).tolist())
    value = evaluate_batch(oracle, [S], ledger)[0]
    return RunResult(S, value, ledger.snapshot())


def brute_force_opt(oracle: ValueOracle, k: int) -> tuple[frozenset, float]:
    """Best set of size min(k, n); for a monotone f this is OPT over |S| <= k."""
    _check_k(oracle, k)
    size = min(k, oracle.n)
    count = math.comb(oracle.n, size)
    if count > BRUTE_FORCE_CAP:
        raise InstanceTooLarge(f"C({oracle.n}, {size}) = {count} exceeds {BRUTE_FORCE_CAP}")
    best, best_val = frozenset(), -math.inf
    for combo in combinations(range(oracle.n), size):
        v = oracle.value(frozenset(combo))
        if v > best_val:
            best, best_val = frozenset(combo), v
    return best, float(best_val)
