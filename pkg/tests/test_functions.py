import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from submod_filter.functions import (ConcaveModularInstance, CoverageInstance,
                                     FacilityLocationInstance, InstanceFormatError,
                                     dumps_instance, instance_from_dict, load_instance,
                                     save_instance, synthesize_instance, validate_submodular)
from submod_filter.oracle import ValueOracle

from conftest import A, B, C, D, all_subsets, modular

# the canonical fixture written out by hand, universe items 1..6
COVER = {A: {1, 2, 3}, B: {3, 4}, C: {5}, D: {4, 5, 6}}


def union_count(S):
    return len(set().union(*(COVER[a] for a in S))) if S else 0


class Square(ValueOracle):
    def __init__(self, n):
        self.n = n

    def value(self, S):
        return float(len(S)) ** 2


def brute_force_violations(f):
    """Every (S, T, a) with S <= T, a outside T, checked one by one."""
    n = f.n
    bad = []
    for T in all_subsets(n):
        rest = [a for a in range(n) if a not in T]
        for size in range(len(T) + 1):
            for S in itertools.combinations(sorted(T), size):
                S = frozenset(S)
                if f.value(S) > f.value(T) + 1e-9:
                    bad.append(("monotone", S, T))
                for a in rest:
                    if f.value(S | {a}) - f.value(S) < f.value(T | {a}) - f.value(T) - 1e-9:
                        bad.append(("submodular", S, T, a))
    return bad


def test_canonical_matches_union_counting(canonical):
    for S in all_subsets(4):
        assert canonical.value(S) == union_count(S)
    assert canonical.value({A, D}) == 6


def test_canonical_file_roundtrip(tmp_path, canonical):
    path = tmp_path / "canon.json"
    save_instance(canonical, path)
    g = load_instance(path, "coverage")
    assert g.n == 4 and g.value({A, D}) == 6


def test_concave_modular_file(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"kind": "concave_modular", "n": 4,
                                "weights": [1, 2, 3, 4], "p": 1}))
    f = load_instance(path)
    assert f.value(range(4)) == 10


@pytest.mark.parametrize("doc", [
    {"kind": "concave_modular", "n": 2, "weights": [1, -1], "p": 1},
    {"kind": "coverage", "n": 1, "universe": 2, "cover": [[2]]},
    {"kind": "coverage", "n": 1, "universe": 2, "cover": [[0]], "colour": "red"},
    {"kind": "facility", "n": 2, "clients": 1, "affinity": [[0.5]]},
    {"kind": "facility", "n": 1, "clients": 1, "affinity": [[-0.5]]},
    {"kind": "concave_modular", "n": 1, "weights": [1], "p": 1.5},
    {"kind": "matroid", "n": 1},
    {"kind": "coverage", "universe": 2, "cover": [[0]]},
])
def test_bad_documents_rejected(doc):
    with pytest.raises(InstanceFormatError):
        instance_from_dict(doc)


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"kind": "coverage",\n "n": 4,,}')
    with pytest.raises(InstanceFormatError, match="line 2"):
        load_instance(path)


def test_format_mismatch(tmp_path, canonical):
    path = tmp_path / "c.json"
    save_instance(canonical, path)
    with pytest.raises(InstanceFormatError):
        load_instance(path, "facility")


def test_facility_value():
    f = FacilityLocationInstance([[0.1, 0.5, 0.0], [0.7, 0.2, 0.3]])
    assert f.value(set()) == 0
    assert f.value({0}) == pytest.approx(0.8)
    assert f.value({1, 2}) == pytest.approx(0.8)
    assert f.value({0, 1}) == pytest.approx(1.2)


def test_weighted_coverage():
    f = CoverageInstance([[0, 1], [1, 2]], 3, weights=[1.0, 2.0, 4.0])
    assert f.value({0}) == 3 and f.value({1}) == 6 and f.value({0, 1}) == 7


def test_validator_accepts_canonical(canonical):
    assert validate_submodular(canonical, "exhaustive").ok


def test_validator_flags_square():
    report = validate_submodular(Square(3), "exhaustive")
    assert not report.ok
    # f_{}(a) = 1 < f_{b}(a) = 3
    assert any(v.kind == "submodular" and v.S == () and len(v.T) == 1 for v in report.violations)


def test_validator_sampled_trials_zero():
    assert validate_submodular(Square(5), "sampled", trials=0).checked == 0
    assert validate_submodular(Square(5), "sampled", trials=0).ok


def test_validator_sampled_finds_square():
    assert not validate_submodular(Square(8), "sampled", trials=200, seed=1).ok


def test_exhaustive_refuses_large_n():
    with pytest.raises(ValueError):
        validate_submodular(synthesize_instance("coverage", 13), "exhaustive")


class Table(ValueOracle):
    def __init__(self, n, table):
        self.n = n
        self.table = table

    def value(self, S):
        return self.table[frozenset(S)]


@given(st.integers(1, 4), st.data())
def test_validator_agrees_with_brute_force(n, data):
    """Arbitrary set functions, including non-monotone and non-submodular ones."""
    vals = data.draw(st.lists(st.integers(0, 4), min_size=2 ** n, max_size=2 ** n))
    table = dict(zip(all_subsets(n), map(float, vals)))
    f = Table(n, table)
    expected = brute_force_violations(f)
    report = validate_submodular(f, "exhaustive", max_report=10_000)
    assert report.ok == (not expected)
    assert ({v.kind for v in report.violations} == {e[0] for e in expected})
    for v in report.violations:
        S, T = frozenset(v.S), frozenset(v.T)
        assert S <= T
        if v.kind == "submodular":
            assert v.a not in T
            assert f.value(S | {v.a}) - f.value(S) < f.value(T | {v.a}) - f.value(T)


def test_synth_is_deterministic():
    params = {"universe": 200, "density": 0.05}
    one = dumps_instance(synthesize_instance("coverage", 50, params, seed=7))
    two = dumps_instance(synthesize_instance("coverage", 50, params, seed=7))
    assert one == two
    assert one != dumps_instance(synthesize_instance("coverage", 50, params, seed=8))


def test_synth_concave_weights_nonnegative():
    f = synthesize_instance("concave_modular", 10, {"p": 0.5}, seed=1)
    assert (f.weights >= 0).all()


def test_synth_facility_is_submodular():
    f = synthesize_instance("facility", 8, {"clients": 20}, seed=3)
    assert validate_submodular(f, "exhaustive").ok


@pytest.mark.parametrize("kind,params", [("coverage", {"density": 0}),
                                         ("coverage", {"colour": 1}),
                                         ("concave_modular", {"p": 0}),
                                         ("facility", {"clients": 0}),
                                         ("matroid", {})])
def test_synth_rejects_bad_params(kind, params):
    with pytest.raises(ValueError):
        synthesize_instance(kind, 5, params)


@given(st.sampled_from(["coverage", "facility", "concave_modular"]),
       st.integers(1, 7), st.integers(0, 2 ** 16))
def test_synthesized_instances_are_monotone_submodular(kind, n, seed):
    f = synthesize_instance(kind, n, {}, seed)
    assert f.value(set()) == 0
    assert validate_submodular(f, "exhaustive").ok


@given(st.integers(0, 2 ** 16), st.data())
def test_coverage_subadditive(seed, data):
    f = synthesize_instance("coverage", 12, {"density": 0.3}, seed)
    S = data.draw(st.frozensets(st.integers(0, 11)))
    T = data.draw(st.frozensets(st.integers(0, 11)))
    assert f.value(S | T) <= f.value(S) + f.value(T) + 1e-9


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=10), st.data())
def test_modular_closed_form(weights, data):
    f = modular(weights)
    S = data.draw(st.frozensets(st.integers(0, len(weights) - 1)))
    assert f.value(S) == pytest.approx(sum(weights[a] for a in S))


@given(st.integers(0, 2 ** 16))
def test_monotone_along_chains(seed):
    rng = np.random.default_rng(seed)
    f = synthesize_instance("facility", 15, {}, seed)
    chain, prev = set(), 0.0
    for a in rng.permutation(15):
        chain.add(int(a))
        cur = f.value(chain)
        assert cur >= prev - 1e-9
        prev = cur


@given(st.sampled_from(["coverage", "facility", "concave_modular"]), st.integers(0, 999))
def test_bulk_helpers_match_value(kind, seed):
    f = synthesize_instance(kind, 9, {}, seed)
    base = frozenset(range(0, 9, 3))
    others = [a for a in range(9) if a not in base]
    plus = f.values_plus(base, others)
    assert plus == pytest.approx([f.value(base | {a}) for a in others])
    minus = f.values_minus(base, sorted(base))
    assert minus == pytest.approx([f.value(base - {a}) for a in sorted(base)])


def test_concave_value():
    f = ConcaveModularInstance([1, 3], 0.5)
    assert f.value({0, 1}) == pytest.approx(2.0)
