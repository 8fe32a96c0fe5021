import math

import pytest
from hypothesis import given, strategies as st

from submod_filter.algorithms import (FilterExhausted, InstanceTooLarge, OptGuessGrid,
                                      SolverConfig, amortized_filtering,
                                      amortized_filtering_full, amortized_filtering_proxy,
                                      brute_force_opt, filter_elements, greedy,
                                      iterative_filtering, lazy_greedy, random_baseline)
from submod_filter.acceptance import shrink_violations
from submod_filter.functions import synthesize_instance
from submod_filter.oracle import RoundLedger

from conftest import A, B, C, D, all_subsets, modular

GUARANTEE = 1 - 1 / math.e
ALL = frozenset({A, B, C, D})


def log_shrink(n, eps):
    return math.ceil(math.log(n) / math.log1p(eps / 2) - 1e-9)


def brute_opt(f, k):
    return max(f.value(S) for S in all_subsets(f.n) if len(S) <= k)


instances = st.tuples(st.sampled_from(["coverage", "facility", "concave_modular"]),
                      st.integers(4, 9), st.integers(0, 2 ** 16), st.integers(1, 4))


# -- filter ------------------------------------------------------------------

def test_filter_discards_light_elements():
    f = modular([10, 10, 0.01, 0.01])
    ledger = RoundLedger()
    cfg = SolverConfig(k=2, eps=0.1, r=1, t=2)
    out = filter_elements(f, ALL, set(), 20.0, cfg, ledger)
    assert out.survivors == {A, B}
    assert out.block == {A, B}
    rec = out.record
    assert rec.steps == [(4, 2)] and rec.exit == "value"
    assert rec.set_values[0] == pytest.approx(10.01)
    assert rec.thresholds[0] == pytest.approx(18)
    assert ledger.rounds == 2 * rec.iterations + 1 == 3


def test_filter_small_X_returns_X():
    f = modular([1.0, 2.0, 3.0, 4.0])
    out = filter_elements(f, {C, D}, set(), 7.0, SolverConfig(k=2, eps=0.1, r=1, t=2),
                          RoundLedger())
    assert out.survivors == {C, D} and out.block == {C, D}
    assert out.record.iterations == 0


def test_filter_no_gap_keeps_X(canonical):
    ledger = RoundLedger()
    out = filter_elements(canonical, ALL - {A}, {A}, 3 + 1e-12, SolverConfig(k=2, eps=0.2),
                          ledger)
    assert out.survivors == ALL - {A}
    assert out.record.iterations == 0 and ledger.rounds == 1


def test_filter_exhausts_on_absurd_guess(canonical):
    with pytest.raises(FilterExhausted) as info:
        filter_elements(canonical, ALL, set(), 1000.0, SolverConfig(k=2, eps=0.2, r=2),
                        RoundLedger())
    assert info.value.record.exit == "exhausted"


@given(instances, st.floats(0.5, 2.0), st.floats(0.05, 0.45))
def test_filter_properties(case, scale, eps):
    kind, n, seed, k = case
    k = min(k, n)
    f = synthesize_instance(kind, n, {}, seed)
    v_star = scale * greedy(f, k).value
    r = max(1, k // 2)
    t = k // r
    cfg = SolverConfig(k=k, eps=eps, r=r, t=t)
    ledger = RoundLedger()
    try:
        out = filter_elements(f, range(n), set(), v_star, cfg, ledger)
    except FilterExhausted as exc:
        rec = exc.record
    else:
        rec = out.record
        assert out.survivors <= frozenset(range(n))
        assert len(out.block) <= max(t, 1)
        if rec.exit == "value":
            assert rec.set_values[-1] >= rec.thresholds[-1]
    sizes = [a for a, _ in rec.steps]
    assert all(x > y for x, y in zip(sizes, sizes[1:]))
    # shrink by 1 + eps/2 whenever t = k / r exactly
    if k % r == 0:
        assert not shrink_violations(rec, eps)
    assert ledger.rounds == len(rec.sizes) + rec.iterations


# -- iterative and amortized filtering ---------------------------------------

def test_iterative_canonical(canonical):
    res = iterative_filtering(canonical, SolverConfig(k=2, eps=0.1, r=2, t=1), 6.0)
    assert res.value == 6 and res.solution == {A, D}
    assert res.rounds <= 2 * (2 * log_shrink(4, 0.1) + 1)


def test_iterative_k_equals_n(canonical):
    res = iterative_filtering(canonical, SolverConfig(k=4, eps=0.2), 6.0)
    assert res.solution == ALL


def test_amortized_canonical(canonical):
    res = amortized_filtering(canonical, SolverConfig(k=2, eps=0.4), 6.0)
    assert res.value >= (GUARANTEE - 0.4) * 6
    assert res.value == 6


def test_literal_epoch_guard_runs(canonical):
    cfg = SolverConfig(k=2, eps=0.25, literal_epoch_guard=True)
    assert amortized_filtering(canonical, cfg, 6.0).value == 6


def _check_amortized_trace(res, cfg, v_star, n):
    vals = [ep.f_start for ep in res.trace] + [res.trace[-1].f_end] if res.trace else []
    vals = [v for v in vals if v is not None]
    assert all(x <= y + 1e-9 for x, y in zip(vals, vals[1:]))
    for ep in res.trace:
        assert ep.filter_iterations <= log_shrink(n, cfg.eps)
        if ep.f_end is not None and ep.size_end < cfg.k and res.stop_reason == "complete":
            assert ep.f_end - ep.f_start >= cfg.eps / 20 * (v_star - ep.f_start) - 1e-9
    total = sum(ep.filter_iterations for ep in res.trace)
    assert total <= 20 / cfg.eps * log_shrink(n, cfg.eps)


@given(instances, st.sampled_from([0.1, 0.2, 0.3, 0.45]))
def test_amortized_exact_meets_guarantee(case, eps):
    kind, n, seed, k = case
    k = min(k, n)
    f = synthesize_instance(kind, n, {}, seed)
    opt = brute_opt(f, k)
    cfg = SolverConfig(k=k, eps=eps)
    res = amortized_filtering(f, cfg, opt)
    assert len(res.solution) <= k
    assert res.value == pytest.approx(f.value(res.solution))
    assert res.value >= (GUARANTEE - eps) * opt - 1e-9
    _check_amortized_trace(res, res.config, opt, n)


@given(instances, st.integers(1, 3))
def test_amortized_small_r_traces(case, r):
    kind, n, seed, k = case
    k = min(k, n)
    f = synthesize_instance(kind, n, {}, seed)
    opt = brute_opt(f, k)
    res = amortized_filtering(f, SolverConfig(k=k, eps=0.2, r=r), opt)
    assert len(res.solution) <= k
    for ep in res.trace:
        for fr in ep.filters:
            if k % res.config.r == 0 and res.config.t == k // res.config.r:
                assert not shrink_violations(fr, 0.2)


@given(instances, st.integers(1, 3))
def test_iterative_rounds_and_size(case, r):
    kind, n, seed, k = case
    k = min(k, n)
    f = synthesize_instance(kind, n, {}, seed)
    res = iterative_filtering(f, SolverConfig(k=k, eps=0.2, r=r), greedy(f, k).value)
    assert len(res.solution) <= k
    iters = math.ceil(k / res.config.t)
    # each iteration: 2 rounds per discard step, 1 closing round, 1 possible truncation round
    assert res.rounds <= iters * (2 * log_shrink(n, 0.2) + 1) + 1


def test_round_cap_truncates():
    f = synthesize_instance("coverage", 40, {}, 2)
    cfg = SolverConfig(k=10, eps=0.2, r=10, round_cap=3)
    res = amortized_filtering(f, cfg, greedy(f, 10).value)
    assert res.truncated and res.stop_reason == "round_cap"
    assert res.rounds <= 3 and len(res.solution) <= 10


def test_exact_mode_falls_back_with_warning():
    f = synthesize_instance("coverage", 60, {}, 1)
    res = amortized_filtering(f, SolverConfig(k=30, eps=0.2, r=3, m=50, enum_cap=1000),
                              greedy(f, 30).value)
    assert res.warnings and "sampling" in res.warnings[0]
    assert len(res.solution) <= 30


@pytest.mark.parametrize("kw", [dict(k=2, eps=0.5), dict(k=2, eps=0), dict(k=0),
                                dict(k=5), dict(k=2, mode="fuzzy"), dict(k=2, r=0)])
def test_config_validation(canonical, kw):
    with pytest.raises(ValueError):
        amortized_filtering(canonical, SolverConfig(**kw), 6.0)


def test_default_block_size():
    cfg = SolverConfig(k=10, eps=0.2, r=3).resolve(50)
    assert cfg.t == 3 and cfg.epoch_budget == 100
    cfg = SolverConfig(k=10, eps=0.2).resolve(50)
    assert cfg.r == math.ceil(20 / 0.2 * math.log(50) / math.log(1.1)) and cfg.t == 1


# -- sampled variants --------------------------------------------------------

def test_proxy_zero_guess_fills_to_k(canonical):
    res = amortized_filtering_proxy(canonical, 0.0, SolverConfig(k=3, eps=0.25, m=50))
    assert len(res.solution) == 3


def test_proxy_seed_sweep(canonical):
    hits = 0
    for seed in range(100):
        cfg = SolverConfig(k=2, eps=0.25, m=500, delta=0.05, seed=seed)
        res = amortized_filtering_proxy(canonical, 6.0, cfg)
        hits += res.value >= (GUARANTEE - 0.25) * 6
    assert hits >= 95


def test_proxy_with_block_size_two(canonical):
    hits = 0
    for seed in range(50):
        cfg = SolverConfig(k=2, eps=0.25, r=1, m=500, seed=seed)
        res = amortized_filtering_proxy(canonical, 6.0, cfg)
        assert len(res.solution) <= 2
        hits += res.value >= (GUARANTEE - 0.25) * 6
    assert hits >= 45


def test_grid_values():
    grid = OptGuessGrid.build(1.0, 0.5, 4)
    assert grid.values == pytest.approx((1, 1.5, 2.25, 3.375, 5.0625))
    assert OptGuessGrid.build(2.0, 0.2, 1).values == (2.0,)


@given(st.floats(0.01, 100), st.floats(0.05, 0.49), st.integers(1, 500))
def test_grid_brackets_any_opt_in_range(base, eps, n):
    grid = OptGuessGrid.build(base, eps, n)
    assert grid.values[0] == base
    assert len(grid.values) == math.ceil(math.log(n) / math.log1p(eps) - 1e-9) + 1
    assert grid.values[-1] >= n * base / (1 + eps) - 1e-9
    for opt in (base, base * n, base * math.sqrt(n)):
        assert any(opt - 1e-9 <= v <= (1 + eps) * opt + 1e-9 for v in grid.values)


def test_full_canonical_seed_sweep(canonical):
    hits = 0
    for seed in range(100):
        res = amortized_filtering_full(canonical, SolverConfig(k=2, eps=0.25, m=500, seed=seed))
        hits += res.value >= (GUARANTEE - 0.25) * 6
    assert hits >= 90


def test_full_lockstep_accounting(canonical):
    res = amortized_filtering_full(canonical, SolverConfig(k=2, eps=0.25, m=100))
    guesses = res.extras["guesses"]
    assert len(guesses) == len(res.extras["grid"])
    assert res.rounds == 1 + max(g["rounds"] for g in guesses) + 1
    assert res.ledger.queries_per_round[0] == 4
    assert res.extras["a_star"] == A


def test_full_round_cap(canonical):
    res = amortized_filtering_full(canonical, SolverConfig(k=2, eps=0.25, m=100, round_cap=2))
    assert res.rounds <= 2 and res.truncated


# -- baselines ---------------------------------------------------------------

def test_greedy_canonical(canonical):
    for solver in (greedy, lazy_greedy):
        res = solver(canonical, 2)
        assert res.solution == {A, D} and res.value == 6 and res.rounds == 2


@given(instances)
def test_lazy_matches_greedy(case):
    kind, n, seed, k = case
    f = synthesize_instance(kind, 3 * n, {}, seed)
    g, lz = greedy(f, 2 * k), lazy_greedy(f, 2 * k)
    assert g.solution == lz.solution and g.value == lz.value
    assert g.rounds == lz.rounds == 2 * k
    assert lz.queries <= g.queries


@given(instances)
def test_greedy_guarantee(case):
    kind, n, seed, k = case
    k = min(k, n)
    f = synthesize_instance(kind, n, {}, seed)
    assert greedy(f, k).value >= GUARANTEE * brute_opt(f, k) - 1e-9


def test_greedy_tie_breaks_low():
    res = greedy(modular([1.0, 1.0, 1.0]), 1)
    assert res.solution == {0}


def test_random_baseline(canonical):
    assert random_baseline(canonical, 4).solution == ALL
    a, b = random_baseline(canonical, 2, seed=4), random_baseline(canonical, 2, seed=4)
    assert a.solution == b.solution and a.rounds == 1
    assert a.value <= brute_force_opt(canonical, 2)[1]


def test_brute_force(canonical):
    assert brute_force_opt(canonical, 2) == ({A, D}, 6)
    assert brute_force_opt(canonical, 0) == (frozenset(), 0)
    assert brute_force_opt(modular([1, 2, 3, 4]), 2)[1] == 7
    with pytest.raises(InstanceTooLarge):
        brute_force_opt(synthesize_instance("coverage", 60), 10)
