"""Uniform size-t subsets and one-round estimators over random blocks.

Two quantities are estimated for a block R ~ U(X, t), the uniform
distribution over size-t subsets of X:

* the block value E[f_S(R)], and
* an element's marginal E[f_{S | (R - {a})}(a) | a in R].

Each comes in a sampled form (m draws) and an exact form that averages over
every subset.  Either way the whole estimate costs one adaptive round.  X is
always reduced to X - S first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from .oracle import RoundLedger, ValueOracle, check_elements

ENUM_CAP = 200_000


class EnumerationCapExceeded(RuntimeError):
    """Exact expectation would need more subsets than the enumeration cap."""


@dataclass(frozen=True)
class SampleSpec:
    t: int
    m: int | None = None   # None: exact enumeration instead of sampling
    seed: int = 0

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"block size t must be >= 1, got {self.t}")
        if self.m is not None and self.m < 1:
            raise ValueError(f"sample count m must be >= 1, got {self.m}")


@dataclass
class Estimate:
    value: float
    m_used: int
    exact: bool
    base_value: float | None = None      # f(S), queried in the same round
    best_sample: frozenset | None = None
    best_gain: float | None = None       # f_S(best_sample)


class SeedStream:
    """Independent seeds for successive estimator calls.

    Seed i is derived from (master seed, key, i), so the randomness of a call
    depends only on its position in the run, never on evaluation order.
    """

    def __init__(self, seed: int, *key: int):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.calls = 0

    def next_seed(self) -> int:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key + (self.calls,))
        self.calls += 1
        return int(ss.generate_state(1)[0])

    def child(self, *key: int) -> "SeedStream":
        return SeedStream(self.seed, *self.key, *key)


def uniform_subset(X: Iterable[int], t: int, rng: np.random.Generator) -> frozenset:
    xs = sorted(X)
    if not 1 <= t <= len(xs):
        raise ValueError(f"t must lie in 1..{len(xs)}, got {t}")
    if t == len(xs):
        return frozenset(xs)
    return frozenset(xs[i] for i in rng.choice(len(xs), size=t, replace=False))


def _draw_rows(size: int, t: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m independent uniform t-subsets of range(size), as sorted index rows."""
    if t == size:
        return np.tile(np.arange(size), (m, 1))
    keys = rng.random((m, size))
    return np.sort(np.argpartition(keys, t - 1, axis=1)[:, :t], axis=1)


def _family(X: frozenset, t: int, spec: SampleSpec, enum_cap: int):
    """Subsets to average over: (xs, rows, counts, m_used, exact)."""
    xs = np.array(sorted(X), dtype=np.intp)
    t = min(t, xs.size)
    if spec.m is None:
        total = math.comb(xs.size, t)
        if total > enum_cap:
            raise EnumerationCapExceeded(
                f"C({xs.size}, {t}) = {total} subsets exceeds cap {enum_cap}")
        rows = np.array(list(combinations(range(xs.size), t)), dtype=np.intp).reshape(total, t)
        return xs, rows, np.ones(total, dtype=np.int64), total, True
    rows = _draw_rows(xs.size, t, spec.m, np.random.default_rng(spec.seed))
    rows, counts = np.unique(rows, axis=0, return_counts=True)
    return xs, rows, counts, spec.m, False


def estimate_set_value(oracle: ValueOracle, X, S, spec: SampleSpec, ledger: RoundLedger,
                       enum_cap: int = ENUM_CAP) -> Estimate:
    """Mean of f_S(R) over R ~ U(X - S, t), plus the best R seen.

    Queries f(S) and every distinct f(S | R) in one round.  When fewer than t
    elements remain, R is all of them.
    """
    S = frozenset(S)
    X = frozenset(X) - S
    check_elements(oracle, S | X)
    if not X:
        return Estimate(0.0, 0, True)
    xs, rows, counts, m_used, exact = _family(X, spec.t, spec, enum_cap)
    blocks = [frozenset(xs[row].tolist()) for row in rows]
    ledger.charge(len(blocks) + 1)

    fS = float(oracle.value(S))
    gains = np.array([oracle.value(S | R) - fS for R in blocks])
    mean = float(gains @ counts / counts.sum())
    # rows are sorted lexicographically, so argmax already prefers lowest ids
    best = int(np.argmax(gains))
    return Estimate(mean, m_used, exact, fS, blocks[best], float(gains[best]))


def exact_set_expectation(oracle: ValueOracle, X, S, t: int, ledger: RoundLedger,
                          enum_cap: int = ENUM_CAP) -> Estimate:
    return estimate_set_value(oracle, X, S, SampleSpec(t), ledger, enum_cap)


def _marginal_rows(size: int, t: int, spec: SampleSpec, enum_cap: int):
    """Ordered prefixes (P, q) with P of size t-1, plus counts and m_used.

    Sampled: the first t positions of a uniform permutation, so for every a the
    set R - {a} (P if a is outside P, else P | {q} minus a) is a uniform
    (t-1)-subset of X - {a}.  Exact: every (t-1)-subset P, with no q.
    """
    if spec.m is None:
        total = math.comb(size, t - 1)
        if total > enum_cap:
            raise EnumerationCapExceeded(
                f"C({size}, {t - 1}) = {total} subsets exceeds cap {enum_cap}")
        rows = np.array(list(combinations(range(size), t - 1)), dtype=np.intp)
        return rows.reshape(total, t - 1), np.ones(total, dtype=np.int64), total, True
    rng = np.random.default_rng(spec.seed)
    order = np.argsort(rng.random((spec.m, size)), axis=1)[:, :t]
    rows = np.concatenate([np.sort(order[:, :t - 1], axis=1), order[:, t - 1:]], axis=1)
    rows, counts = np.unique(rows, axis=0, return_counts=True)
    return rows, counts, spec.m, False


def estimate_marginal(oracle: ValueOracle, X, S, a: int, spec: SampleSpec,
                      ledger: RoundLedger, enum_cap: int = ENUM_CAP) -> Estimate:
    """Mean of f_{S | (R - {a})}(a) over R ~ U(X - S, t) conditioned on a in R.

    R - {a} is then a uniform (t-1)-subset of X - S - {a}.  Queries
    f(S | R | {a}) and f(S | (R - {a})) for every sample, in one round.
    """
    S = frozenset(S)
    check_elements(oracle, S | frozenset(X) | {a})
    if a in S:
        ledger.charge(1)
        return Estimate(0.0, spec.m or 1, spec.m is None)
    rest = np.array(sorted(frozenset(X) - S - {a}), dtype=np.intp)
    t = min(spec.t, rest.size + 1)
    if spec.m is None:
        total = math.comb(rest.size, t - 1)
        if total > enum_cap:
            raise EnumerationCapExceeded(
                f"C({rest.size}, {t - 1}) = {total} subsets exceeds cap {enum_cap}")
        rows = np.array(list(combinations(range(rest.size), t - 1)), dtype=np.intp)
        rows, counts, m_used, exact = rows.reshape(total, t - 1), np.ones(total), total, True
    else:
        rows = _draw_rows(rest.size, t - 1, spec.m, np.random.default_rng(spec.seed)) \
            if t > 1 else np.zeros((spec.m, 0), dtype=np.intp)
        rows, counts = np.unique(rows, axis=0, return_counts=True)
        m_used, exact = spec.m, False
    bases = [S | frozenset(rest[row].tolist()) for row in rows]
    ledger.charge(len({q for B in bases for q in (B, B | {a})}))
    diffs = np.array([oracle.value(B | {a}) - oracle.value(B) for B in bases])
    return Estimate(float(diffs @ counts / counts.sum()), m_used, exact)


def exact_marginal_expectation(oracle: ValueOracle, X, S, a: int, t: int,
                               ledger: RoundLedger, enum_cap: int = ENUM_CAP) -> Estimate:
    return estimate_marginal(oracle, X, S, a, SampleSpec(t), ledger, enum_cap)


def estimate_marginals_all(oracle: ValueOracle, X, S, spec: SampleSpec, ledger: RoundLedger,
                           enum_cap: int = ENUM_CAP) -> dict[int, Estimate]:
    """:func:`estimate_marginal` for every a in X - S, sharing draws, in one round.

    Each draw is an ordered prefix (P, q) of a random permutation of X.
    Elements outside P use R - {a} = P; elements of P use R - {a} = P | {q} - {a}.
    """
    S = frozenset(S)
    X = frozenset(X) - S
    check_elements(oracle, S | X)
    if not X:
        return {}
    xs = np.array(sorted(X), dtype=np.intp)
    t = min(spec.t, xs.size)
    rows, counts, m_used, exact = _marginal_rows(xs.size, t, spec, enum_cap)

    bits = [1 << int(a) for a in xs]
    keys = set()
    for row in rows:
        mP = 0
        for i in row[:t - 1]:
            mP |= bits[i]
        keys.add(mP)
        keys.update(mP | b for b in bits)
        if not exact and t > 1:
            mQ = mP | bits[row[t - 1]]
            keys.update(mQ ^ bits[i] for i in row[:t - 1])
    ledger.charge(len(keys))

    total = np.zeros(xs.size)
    weight = np.zeros(xs.size)
    for row, c in zip(rows, counts):
        P = row[:t - 1]
        in_P = np.zeros(xs.size, dtype=bool)
        in_P[P] = True
        base = S | frozenset(xs[P].tolist())
        fP = float(oracle.value(base))
        plus = oracle.values_plus(base, xs[~in_P])
        total[~in_P] += c * (plus - fP)
        weight[~in_P] += c
        if not exact and t > 1:
            q = int(row[t - 1])
            fQ = float(plus[np.searchsorted(np.flatnonzero(~in_P), q)])
            total[P] += c * (fQ - oracle.values_minus(base | {int(xs[q])}, xs[P]))
            weight[P] += c
    means = total / weight
    return {int(a): Estimate(float(means[i]), m_used, exact) for i, a in enumerate(xs)}


def plan_sample_size(opt_bound: float, eps_abs: float, delta: float) -> int:
    """Samples so that a mean of values in [0, opt_bound] is eps_abs-close w.p. 1 - delta.

    Hoeffding: m = ceil((1/2) (opt_bound / eps_abs)^2 ln(2 / delta)).
    """
    if opt_bound <= 0 or eps_abs <= 0 or not 0 < delta < 1:
        raise ValueError(f"need opt_bound > 0, eps_abs > 0, 0 < delta < 1; "
                         f"got {opt_bound}, {eps_abs}, {delta}")
    m = 0.5 * (opt_bound / eps_abs) ** 2 * math.log(2.0 / delta)
    return max(1, math.ceil(m - 1e-9))


def plan_round_sample_size(opt_bound: float, eps_abs: float, delta: float, n: int) -> int:
    """Total samples for n simultaneous estimates in one round.

    m = ceil(n (opt_bound / eps_abs)^2 ln(2n / delta)), a union bound over n
    estimates.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    plan_sample_size(opt_bound, eps_abs, delta)  # argument checks
    m = n * (opt_bound / eps_abs) ** 2 * math.log(2.0 * n / delta)
    return max(1, math.ceil(m - 1e-9))
