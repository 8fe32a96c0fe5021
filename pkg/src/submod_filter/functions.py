"""Monotone submodular objectives, their file format, and a structural validator.

Instance files are JSON objects, one instance per file::

    {"kind": "coverage", "n": 4, "universe": 6,
     "cover": [[0, 1, 2], [2, 3], [4], [3, 4, 5]],
     "weights": [1, 1, 1, 1, 1, 1]}                     # weights optional

    {"kind": "facility", "n": 3, "clients": 2,
     "affinity": [[0.1, 0.5, 0.0], [0.7, 0.2, 0.3]]}    # clients x n, row-major

    {"kind": "concave_modular", "n": 4, "weights": [1, 2, 3, 4], "p": 1.0}

Unknown fields are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .oracle import ValueOracle

TOL = 1e-9
EXHAUSTIVE_MAX_N = 12
KINDS = ("coverage", "facility", "concave_modular")


class InstanceFormatError(ValueError):
    """Malformed instance file or payload (parse error or broken invariant)."""


def _idx(S) -> np.ndarray:
    return np.fromiter(S, dtype=np.intp, count=len(S))


class CoverageInstance(ValueOracle):
    """f(S) = total weight of the universe items covered by S."""

    kind = "coverage"

    def __init__(self, cover: Sequence[Sequence[int]], universe: int,
                 weights: Sequence[float] | None = None):
        self.n = len(cover)
        self.universe = int(universe)
        if self.n < 1:
            raise InstanceFormatError("coverage: need at least one element")
        if self.universe < 0:
            raise InstanceFormatError("coverage: universe size must be >= 0")
        self.cover = [sorted(set(int(i) for i in c)) for c in cover]
        for a, c in enumerate(self.cover):
            if c and (c[0] < 0 or c[-1] >= self.universe):
                raise InstanceFormatError(
                    f"coverage: element {a} covers item outside 0..{self.universe - 1}")
        w = np.ones(self.universe) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != (self.universe,):
            raise InstanceFormatError(
                f"coverage: expected {self.universe} weights, got {w.size}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InstanceFormatError("coverage: weights must be finite and >= 0")
        self.weights = w
        self._mat = np.zeros((self.n, self.universe), dtype=bool)
        for a, c in enumerate(self.cover):
            self._mat[a, c] = True

    def _covered(self, S) -> np.ndarray:
        if not S:
            return np.zeros(self.universe, dtype=bool)
        return self._mat[_idx(S)].any(axis=0)

    def value(self, S) -> float:
        return float(self.weights[self._covered(S)].sum())

    def values_plus(self, base, candidates):
        covered = self._covered(base)
        fb = float(self.weights[covered].sum())
        fresh = np.where(covered, 0.0, self.weights)
        return fb + (self._mat[np.asarray(candidates, dtype=np.intp)] * fresh).sum(axis=1)

    def values_minus(self, base, members):
        if not base:
            return np.zeros(len(members))
        counts = self._mat[_idx(base)].sum(axis=0)
        fb = float(self.weights[counts > 0].sum())
        sole = np.where(counts == 1, self.weights, 0.0)
        return fb - (self._mat[np.asarray(members, dtype=np.intp)] * sole).sum(axis=1)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "universe": self.universe, "cover": self.cover}
        if not np.all(self.weights == 1.0):
            d["weights"] = self.weights.tolist()
        return d


class FacilityLocationInstance(ValueOracle):
    """f(S) = sum over clients of the best affinity to a facility in S."""

    kind = "facility"

    def __init__(self, affinity):
        A = np.asarray(affinity, dtype=float)
        if A.ndim != 2 or A.shape[1] < 1:
            raise InstanceFormatError("facility: affinity must be a non-empty clients x n matrix")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise InstanceFormatError("facility: affinities must be finite and >= 0")
        self.affinity = A
        self.clients, self.n = A.shape
        self._by_facility = np.ascontiguousarray(A.T)

    def _best(self, S) -> np.ndarray:
        if not S:
            return np.zeros(self.clients)
        return self._by_facility[_idx(S)].max(axis=0)

    def value(self, S) -> float:
        return float(self._best(S).sum())

    def values_plus(self, base, candidates):
        best = self._best(base)
        rows = self._by_facility[np.asarray(candidates, dtype=np.intp)]
        return np.maximum(rows, best).sum(axis=1)

    def values_minus(self, base, members):
        members = list(members)
        if len(base) <= 1:
            return np.array([0.0 if a in base else self.value(base) for a in members])
        order = sorted(base)
        sub = self._by_facility[order]
        top2 = np.sort(sub, axis=0)[-2:]
        first, second = top2[1], top2[0]
        winner = np.array(order)[sub.argmax(axis=0)]
        out = np.empty(len(members))
        for i, a in enumerate(members):
            if a not in base:
                out[i] = first.sum()
            else:
                out[i] = np.where(winner == a, second, first).sum()
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "clients": self.clients,
                "affinity": self.affinity.tolist()}


class ConcaveModularInstance(ValueOracle):
    """f(S) = (sum of weights in S) ** p with 0 < p <= 1."""

    kind = "concave_modular"

    def __init__(self, weights: Sequence[float], p: float = 1.0):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise InstanceFormatError("concave_modular: need at least one weight")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InstanceFormatError("concave_modular: weights must be finite and >= 0")
        if not 0.0 < p <= 1.0:
            raise InstanceFormatError(f"concave_modular: p must lie in (0, 1], got {p}")
        self.weights = w
        self.p = float(p)
        self.n = w.size

    def _total(self, S) -> float:
        return float(self.weights[_idx(S)].sum()) if S else 0.0

    def _shape(self, x):
        return x if self.p == 1.0 else np.power(x, self.p)

    def value(self, S) -> float:
        return float(self._shape(self._total(S)))

    def values_plus(self, base, candidates):
        cand = np.asarray(candidates, dtype=np.intp)
        tot = self._total(base)
        inside = np.isin(cand, list(base)) if base else np.zeros(cand.size, bool)
        return self._shape(tot + np.where(inside, 0.0, self.weights[cand]))

    def values_minus(self, base, members):
        mem = np.asarray(members, dtype=np.intp)
        tot = self._total(base)
        inside = np.isin(mem, list(base)) if base else np.zeros(mem.size, bool)
        return self._shape(np.maximum(tot - np.where(inside, self.weights[mem], 0.0), 0.0))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n, "weights": self.weights.tolist(), "p": self.p}


def canonical_coverage() -> CoverageInstance:
    """Four elements a, b, c, d over universe items 1..6 (stored as 0..5).

    cover(a)={1,2,3}, cover(b)={3,4}, cover(c)={5}, cover(d)={4,5,6}; OPT for
    k=2 is f({a, d}) = 6.
    """
    return CoverageInstance([[0, 1, 2], [2, 3], [4], [3, 4, 5]], universe=6)


# -- file format -------------------------------------------------------------

_FIELDS = {
    "coverage": ({"kind", "n", "universe", "cover"}, {"weights"}),
    "facility": ({"kind", "n", "clients", "affinity"}, set()),
    "concave_modular": ({"kind", "n", "weights", "p"}, set()),
}


def instance_from_dict(doc: dict[str, Any]) -> ValueOracle:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    kind = doc.get("kind")
    if kind not in _FIELDS:
        raise InstanceFormatError(f"field 'kind': expected one of {KINDS}, got {kind!r}")
    required, optional = _FIELDS[kind]
    missing = required - doc.keys()
    if missing:
        raise InstanceFormatError(f"{kind}: missing field(s) {sorted(missing)}")
    unknown = doc.keys() - required - optional
    if unknown:
        raise InstanceFormatError(f"{kind}: unknown field(s) {sorted(unknown)}")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InstanceFormatError(f"field 'n': expected integer >= 1, got {n!r}")
    try:
        if kind == "coverage":
            cover = doc["cover"]
            if not isinstance(cover, list) or len(cover) != n:
                raise InstanceFormatError(f"field 'cover': expected {n} adjacency lists")
            for a, c in enumerate(cover):
                if not isinstance(c, list) or not all(isinstance(i, int) for i in c):
                    raise InstanceFormatError(f"field 'cover[{a}]': expected a list of integers")
            inst = CoverageInstance(cover, doc["universe"], doc.get("weights"))
        elif kind == "facility":
            A = doc["affinity"]
            if (not isinstance(A, list) or len(A) != doc["clients"]
                    or any(not isinstance(row, list) or len(row) != n for row in A)):
                raise InstanceFormatError(
                    f"field 'affinity': expected {doc['clients']} rows of {n} numbers")
            inst = FacilityLocationInstance(A)
        else:
            w = doc["weights"]
            if not isinstance(w, list) or len(w) != n:
                raise InstanceFormatError(f"field 'weights': expected {n} numbers")
            inst = ConcaveModularInstance(w, float(doc["p"]))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"{kind}: {exc}") from exc
    return inst


def load_instance(path, format: str | None = None) -> ValueOracle:
    """Read an instance file; ``format`` (if given) must match its ``kind``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        inst = instance_from_dict(doc)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from exc
    if format is not None and inst.kind != format:
        raise InstanceFormatError(f"{path}: expected kind {format!r}, file has {inst.kind!r}")
    return inst


def dumps_instance(inst: ValueOracle) -> str:
    return json.dumps(inst.to_dict(), sort_keys=True) + "\n"


def save_instance(inst: ValueOracle, path) -> None:
    Path(path).write_text(dumps_instance(inst))


# -- synthesis ---------------------------------------------------------------

def synthesize_instance(kind: str, n: int, params: dict | None = None, seed: int = 0):
    """Random instance of ``kind``; the same seed always gives the same instance.

    coverage: ``universe`` (default 4n), ``density`` in (0, 1] (default 0.1).
    facility: ``clients`` (default 2n).
    concave_modular: ``p`` in (0, 1] (default 0.5).
    """
    params = dict(params or {})
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if kind == "coverage":
        u = int(params.pop("universe", 4 * n))
        density = float(params.pop("density", 0.1))
        if u < 1 or not 0.0 < density <= 1.0:
            raise ValueError(f"coverage: need universe >= 1 and density in (0, 1], "
                             f"got {u}, {density}")
        mat = rng.random((n, u)) < density
        inst = CoverageInstance([np.flatnonzero(row).tolist() for row in mat], u)
    elif kind == "facility":
        c = int(params.pop("clients", 2 * n))
        if c < 1:
            raise ValueError(f"facility: clients must be >= 1, got {c}")
        inst = FacilityLocationInstance(np.round(rng.random((c, n)), 6))
    elif kind == "concave_modular":
        p = float(params.pop("p", 0.5))
        if not 0.0 < p <= 1.0:
            raise ValueError(f"concave_modular: p must lie in (0, 1], got {p}")
        inst = ConcaveModularInstance(np.round(rng.random(n), 6), p)
    else:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if params:
        raise ValueError(f"{kind}: unknown parameter(s) {sorted(params)}")
    return inst


# -- validation --------------------------------------------------------------

@dataclass
class Violation:
    kind: str            # "monotone" or "submodular"
    S: tuple
    T: tuple
    a: int | None
    lhs: float
    rhs: float


@dataclass
class ValidationReport:
    mode: str
    checked: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _members(mask: int) -> tuple:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def validate_submodular(oracle: ValueOracle, mode: str = "exhaustive", trials: int = 0,
                        seed: int = 0, max_report: int = 100) -> ValidationReport:
    """Check monotonicity and diminishing returns.

    ``exhaustive`` covers every S <= T and a outside T (n <= 12).  It tabulates
    f on all 2^n subsets and compares each marginal f_T(a) against the minimum
    of f_S(a) over subsets S of T, computed by a subset-minimum sweep, so every
    triple is covered without enumerating the triples one by one.  Witnesses
    for the first ``max_report`` failures are recovered by direct search.
    ``sampled`` draws ``trials`` random triples.
    """
    n = oracle.n
    if mode == "exhaustive":
        if n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"exhaustive validation needs n <= {EXHAUSTIVE_MAX_N}, got {n}")
        return _validate_exhaustive(oracle, max_report)
    if mode != "sampled":
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")

    rng = np.random.default_rng(seed)
    report = ValidationReport("sampled", 0)
    for _ in range(trials):
        in_T = rng.random(n) < rng.random()
        outside = np.flatnonzero(~in_T)
        if outside.size == 0:
            in_T[rng.integers(n)] = False
            outside = np.flatnonzero(~in_T)
        a = int(rng.choice(outside))
        in_S = in_T & (rng.random(n) < rng.random())
        S = frozenset(np.flatnonzero(in_S).tolist())
        T = frozenset(np.flatnonzero(in_T).tolist())
        fS, fT = oracle.value(S), oracle.value(T)
        gS, gT = oracle.value(S | {a}) - fS, oracle.value(T | {a}) - fT
        report.checked += 1
        if fS > fT + TOL and len(report.violations) < max_report:
            report.violations.append(Violation("monotone", tuple(sorted(S)), tuple(sorted(T)),
                                               None, fS, fT))
        if gS < gT - TOL and len(report.violations) < max_report:
            report.violations.append(Violation("submodular", tuple(sorted(S)),
                                               tuple(sorted(T)), a, gS, gT))
    return report


def _validate_exhaustive(oracle: ValueOracle, max_report: int) -> ValidationReport:
    n = oracle.n
    full = 1 << n
    f = np.array([oracle.value(frozenset(_members(mask))) for mask in range(full)])
    masks = np.arange(full)
    report = ValidationReport("exhaustive", 0)

    for a in range(n):
        bit = 1 << a
        without = masks[(masks & bit) == 0]
        gain = np.full(full, np.inf)
        gain[without] = f[without | bit] - f[without]
        report.checked += without.size
        for T in without[gain[without] < -TOL]:
            if len(report.violations) < max_report:
                report.violations.append(Violation(
                    "monotone", _members(int(T)), _members(int(T) | bit), a,
                    float(f[T]), float(f[T | bit])))
        # low[T] = min over S <= T of gain[S]
        low = gain.copy()
        for b in range(n):
            if b == a:
                continue
            has_b = (masks >> b & 1).astype(bool)
            np.minimum(low, np.where(has_b, low[masks ^ (1 << b) * has_b], np.inf), out=low)
        bad = without[low[without] < gain[without] - TOL]
        report.checked += int(sum(1 << bin(int(T)).count("1") for T in without))
        for T in bad:
            if len(report.violations) >= max_report:
                break
            T = int(T)
            sub = T
            while True:
                if gain[sub] < gain[T] - TOL:
                    report.violations.append(Violation(
                        "submodular", _members(sub), _members(T), a,
                        float(gain[sub]), float(gain[T])))
                    break
                if sub == 0:
                    break
                sub = (sub - 1) & T
    return report


__all__ = [
    "CoverageInstance", "FacilityLocationInstance", "ConcaveModularInstance",
    "InstanceFormatError", "ValidationReport", "Violation", "canonical_coverage",
    "instance_from_dict", "load_instance", "dumps_instance", "save_instance",
    "synthesize_instance", "validate_submodular",
]
