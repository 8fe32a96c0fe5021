"""Value-oracle abstraction and adaptive-round accounting.

Every query an algorithm makes goes through a :class:`RoundLedger`.  One call
to :func:`evaluate_batch` or :func:`marginal_batch` is one adaptive round: the
queries inside it may not depend on each other's answers, so they are handed
over together and charged together.
"""
from __future__ import annotations

import copy
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ElementSet = frozenset  # of int ids in 0..n-1


class RoundCapExceeded(RuntimeError):
    """Raised when a new round would push the ledger past its cap."""


class InvalidElement(ValueError):
    pass


class ValueOracle(ABC):
    """A set function f over the ground set {0, ..., n-1}.

    Subclasses implement :meth:`value`.  The two bulk helpers exist so that
    objectives with cheap incremental structure can answer many related
    queries at once.  They must agree with the corresponding ``value`` calls
    up to floating-point rounding, and each row must be computed independently
    of the others so results do not depend on how queries are grouped.
    """

    n: int

    @abstractmethod
    def value(self, S: frozenset) -> float: ...

    def values_plus(self, base: frozenset, candidates: Sequence[int]) -> np.ndarray:
        """f(base | {a}) for every a in candidates."""
        return np.array([self.value(base | {a}) for a in candidates], dtype=float)

    def values_minus(self, base: frozenset, members: Sequence[int]) -> np.ndarray:
        """f(base - {a}) for every a in members."""
        return np.array([self.value(base - {a}) for a in members], dtype=float)

    @property
    def ground_set(self) -> frozenset:
        return frozenset(range(self.n))


@dataclass
class RoundLedger:
    round_cap: int | None = None
    queries_per_round: list[int] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.queries_per_round)

    @property
    def total_queries(self) -> int:
        return sum(self.queries_per_round)

    def charge(self, n_queries: int) -> None:
        """Open and close one round of ``n_queries`` queries.

        Zero queries is a vacuous round and is not recorded.
        """
        if n_queries <= 0:
            return
        if self.round_cap is not None and self.rounds >= self.round_cap:
            raise RoundCapExceeded(
                f"round cap {self.round_cap} reached ({self.total_queries} queries so far)"
            )
        self.queries_per_round.append(int(n_queries))

    def snapshot(self) -> "RoundLedger":
        return copy.deepcopy(self)

    def absorb_lockstep(self, ledgers: Iterable["RoundLedger"]) -> None:
        """Append rounds of independent sub-runs executed in lockstep.

        Round j of every sub-run happens in the same global round, so the
        number of appended rounds is the longest sub-run and each global
        round carries the summed query counts.
        """
        ledgers = list(ledgers)
        depth = max((lg.rounds for lg in ledgers), default=0)
        for j in range(depth):
            self.charge(sum(lg.queries_per_round[j] for lg in ledgers if j < lg.rounds))

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "total_queries": self.total_queries,
            "queries_per_round": list(self.queries_per_round),
            "round_cap": self.round_cap,
        }


def check_elements(oracle: ValueOracle, S: Iterable[int]) -> None:
    for a in S:
        if not 0 <= a < oracle.n:
            raise InvalidElement(f"element {a} outside ground set of size {oracle.n}")


def evaluate_batch(oracle: ValueOracle, batch: Sequence[Iterable[int]],
                   ledger: RoundLedger) -> list[float]:
    """Evaluate all sets of ``batch`` in one adaptive round.

    Identical sets are queried once; the round is charged the number of
    distinct sets.  Values come back in batch order.
    """
    sets = [frozenset(s) for s in batch]
    if not sets:
        return []
    for s in sets:
        check_elements(oracle, s)
    distinct = dict.fromkeys(sets)
    ledger.charge(len(distinct))
    for s in distinct:
        distinct[s] = float(oracle.value(s))
    return [distinct[s] for s in sets]


def marginal_batch(oracle: ValueOracle, base: Iterable[int],
                   additions: Sequence[Iterable[int]], ledger: RoundLedger) -> list[float]:
    """f(base | X) - f(base) for every X in ``additions``, in one round."""
    base = frozenset(base)
    adds = [frozenset(x) for x in additions]
    if not adds:
        return []
    check_elements(oracle, base)
    for x in adds:
        check_elements(oracle, x)
    unions = {base: None}
    for x in adds:
        unions.setdefault(base | x, None)
    ledger.charge(len(unions))

    f_base = float(oracle.value(base))
    unions[base] = f_base
    singles = sorted({next(iter(x)) for x in adds if len(x) == 1 and not x <= base})
    if singles:
        for a, v in zip(singles, oracle.values_plus(base, singles)):
            unions[base | {a}] = float(v)
    for u, v in unions.items():
        if v is None:
            unions[u] = float(oracle.value(u))
    return [unions[base | x] - f_base for x in adds]
