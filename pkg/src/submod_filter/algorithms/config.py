from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from ..oracle import RoundLedger
from ..sampling import ENUM_CAP, plan_sample_size

MODES = ("exact", "sampled")


def default_r(n: int, eps: float, mode: str) -> int:
    """20/eps * log_{1+eps/2}(n) (exact) or log_{1+eps/3}(n) (sampled), rounded up."""
    shrink = 1 + eps / 2 if mode == "exact" else 1 + eps / 3
    return max(1, math.ceil(20 / eps * math.log(n) / math.log(shrink) - 1e-9))


def default_m(k: int, eps: float, delta: float) -> int:
    # Hoeffding with values in [0, v*] and absolute error eps * v* / k
    return plan_sample_size(1.0, eps / k, delta)


@dataclass
class SolverConfig:
    k: int
    eps: float = 0.2
    mode: str = "exact"
    r: int | None = None
    t: int | None = None
    m: int | None = None
    delta: float = 0.05
    round_cap: int | None = None
    seed: int = 0
    epoch_budget: int | None = None
    literal_epoch_guard: bool = False
    enum_cap: int = ENUM_CAP

    def resolve(self, n: int) -> "SolverConfig":
        """Fill in derived parameters for a ground set of size n and validate."""
        if not 0 < self.eps < 0.5:
            raise ValueError(f"eps must lie in (0, 1/2), got {self.eps}")
        if not 1 <= self.k <= n:
            raise ValueError(f"k must lie in 1..{n}, got {self.k}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        r = self.r if self.r is not None else default_r(n, self.eps, self.mode)
        if r < 1:
            raise ValueError(f"r must be >= 1, got {r}")
        t = self.t if self.t is not None else max(1, self.k // r)
        if t < 1:
            raise ValueError(f"t must be >= 1, got {t}")
        m = self.m
        if m is None and self.mode == "sampled":
            m = default_m(self.k, self.eps, self.delta)
        if m is not None and m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        epochs = self.epoch_budget if self.epoch_budget is not None else math.ceil(20 / self.eps - 1e-9)
        return replace(self, r=r, t=t, m=m, epoch_budget=epochs)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FilterRecord:
    """One call of the filter: |X| and the random-block value at each value round."""
    sizes: list[int] = field(default_factory=list)
    set_values: list[float] = field(default_factory=list)
    thresholds: list[float] = field(default_factory=list)
    exact: list[bool] = field(default_factory=list)
    steps: list[tuple[int, int]] = field(default_factory=list)   # |X| before/after each discard
    exit: str = ""               # value | small | stalled | exhausted
    base_value: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.steps)


@dataclass
class EpochRecord:
    index: int
    size_start: int
    f_start: float | None = None
    f_end: float | None = None
    size_end: int | None = None
    filters: list[FilterRecord] = field(default_factory=list)

    @property
    def filter_iterations(self) -> int:
        return sum(fr.iterations for fr in self.filters)


@dataclass
class RunResult:
    solution: frozenset
    value: float
    ledger: RoundLedger
    truncated: bool = False
    stop_reason: str = "complete"   # complete | round_cap | exhausted
    trace: list[EpochRecord] = field(default_factory=list)
    config: SolverConfig | None = None
    v_star: float | None = None
    warnings: list[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return self.ledger.rounds

    @property
    def queries(self) -> int:
        return self.ledger.total_queries
