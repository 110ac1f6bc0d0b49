import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from shufflelab.chains import (
    ConditionalKernel,
    DecomposedState,
    DominatingWalks,
    TruncatedChain,
    bound_evaluators,
    conditional_probs,
    default_truncation,
    kernel_check,
    levy_domination_check,
    normal_tail,
    sample_by_rejection,
    sample_conditioned,
    simulate_sxy,
    simulate_zeta,
    sxy_law,
    sxy_transitions,
    write_path_csv,
    x_increment_balance,
    zeta_law,
    zeta_path_law,
)
from shufflelab.exact import exact_conditional_path_law, exact_conditional_position
from shufflelab.rng import replica_rng

states = st.integers(2, 400).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n)))


def test_conditional_probs_examples():
    assert conditional_probs(4, 2, exact=True) == (Fraction(1, 4), Fraction(5, 12), Fraction(1, 3))
    assert conditional_probs(4, 1, exact=True) == (0, Fraction(3, 4), Fraction(1, 4))
    pm, _, pp = conditional_probs(100, 50)
    assert pp == pytest.approx(2500 / 9900, abs=1e-15)
    assert pm == pytest.approx(49 * 51 / 9900, abs=1e-15)


@given(states)
def test_kernel_invariants(state):
    n, i = state
    pm, p0, pp = conditional_probs(n, i)
    assert abs(pm + p0 + pp - 1) <= 1e-15
    assert min(pm, p0, pp) >= 0
    assert abs(pp - pm) <= 1 / n + 1e-15
    if i == 1:
        assert pm == 0
    if i == n:
        assert pp == 0
    assert sum(conditional_probs(n, i, exact=True)) == 1


def test_conditional_probs_rejects_out_of_range():
    with pytest.raises(ValueError):
        conditional_probs(5, 0)
    with pytest.raises(ValueError):
        conditional_probs(5, 6)


def test_kernel_matrix_is_stochastic():
    P = ConditionalKernel(30, 7).matrix()
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-15)


def test_normal_tail_values():
    assert normal_tail(0.0) == 0.5
    mp = float(mpmath.mpf(1) / 2 * mpmath.erfc(mpmath.mpf("1.6329932") / mpmath.sqrt(2)))
    assert abs(normal_tail(1.6329932) - mp) < 1e-12
    assert normal_tail(1.6329932) == pytest.approx(0.0512352, abs=5e-8)
    for x in (-8.0, -1.0, 0.3, 2.0, 6.5, 12.0):
        ref = float(mpmath.mpf(1) / 2 * mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)))
        assert abs(normal_tail(x) - ref) <= 1e-12


@given(st.floats(-30, 30))
def test_normal_tail_symmetry(x):
    assert normal_tail(x) + normal_tail(-x) == pytest.approx(1.0, abs=1e-15)


def test_truncated_chain_window():
    z = TruncatedChain(20, 10, 3)
    assert z.in_window(7) and z.in_window(13)
    assert not z.in_window(14) and not z.in_window(0)
    assert z.probs(25) == conditional_probs(20, 10)
    assert z.probs(12) == conditional_probs(20, 12)
    with pytest.raises(ValueError):
        TruncatedChain(20, 10, 0)


def test_truncated_chain_step_matches_compiled_path():
    n, j, M, t = 40, 5, 3, 200
    path = simulate_zeta(n, j, M, t, seed=3)
    assert path[0] == j
    assert np.all(np.abs(np.diff(path)) <= 1)
    z = TruncatedChain(n, j, M)
    rng = replica_rng(3, "zeta", 0)
    ref = [j] + [z.step(rng) for _ in range(t)]
    assert np.array_equal(path, ref)


def test_zeta_large_window_equals_kernel_power():
    n, j, t = 6, 3, 3
    law = zeta_law(n, j, M=t, t=t)
    ref = ConditionalKernel(n, j).law(t)
    for k in range(1, n + 1):
        assert abs(float(law.get(k, 0)) - ref[k - 1]) < 1e-12


def test_zeta_exceedance_matches_conditioned_chain():
    n, j, M, t = 6, 3, 3, 3
    cond = exact_conditional_path_law(n, j, t)
    zeta = zeta_path_law(n, j, M, t)
    for u in range(M + 1):
        a = sum(p for path, p in cond.items() if max(abs(x - j) for x in path) > u)
        b = sum(p for path, p in zeta.items() if max(abs(x - j) for x in path) > u)
        assert a == b


@pytest.mark.parametrize("M", [1, 2, 3])
def test_truncation_tv_bound(M):
    n, j, t = 6, 3, 3
    cond = exact_conditional_path_law(n, j, t)
    zeta = zeta_path_law(n, j, M, t)
    tv = sum(abs(cond.get(k, 0) - zeta.get(k, 0)) for k in set(cond) | set(zeta)) / 2
    exceed = sum(p for path, p in zeta.items() if max(abs(x - j) for x in path) > M)
    assert tv <= exceed


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 60).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(1, 8))))
def test_sxy_transition_masses(args):
    n, j, M = args
    for s in range(-3, 4):
        for x in range(-2, 3):
            moves = sxy_transitions(n, j, M, DecomposedState(s, x, 0))
            total = sum(p for _, p in moves)
            assert total == 1
            assert all(p >= 0 for _, p in moves)
            for (ds, dx, dy), _ in moves:
                assert ds in (-1, 0, 1) and dx in (-1, 0, 1) and dy in (-1, 0, 1)


def test_sxy_sum_has_zeta_law():
    n, j, M, t = 5, 3, 2, 3
    s = sxy_law(n, j, M, t)
    z = zeta_law(n, j, M, t)
    summed = {}
    for (a, b, c), p in s.items():
        summed[j + a + b + c] = summed.get(j + a + b + c, 0) + p
    tv = sum(abs(summed.get(k, 0) - z.get(k, 0)) for k in set(summed) | set(z)) / 2
    assert tv == 0


def test_s_component_is_symmetric_walk():
    n, j, M, t = 7, 4, 2, 3
    pm, _, pp = conditional_probs(n, j, exact=True)
    q = min(pm, pp)
    law = sxy_law(n, j, M, t)
    s_law = {}
    for (a, _, _), p in law.items():
        s_law[a] = s_law.get(a, 0) + p
    step = {-1: q, 0: 1 - 2 * q, 1: q}
    ref = {0: Fraction(1)}
    for _ in range(t):
        nxt = {}
        for k, p in ref.items():
            for d, w in step.items():
                nxt[k + d] = nxt.get(k + d, 0) + p * w
        ref = nxt
    assert {k: v for k, v in s_law.items() if v} == {k: v for k, v in ref.items() if v}


def test_x_cannot_move_from_origin():
    for n, j, M in [(5, 3, 2), (10, 1, 4), (10, 10, 3)]:
        moves = sxy_transitions(n, j, M, (0, 0, 0))
        assert all(dx == 0 for (_, dx, _), p in moves if p > 0)


def test_x_jumps_are_fair():
    # given the X history, up and down jumps carry equal mass
    assert x_increment_balance(6, 2, 2, 3) == 0
    assert x_increment_balance(7, 4, 3, 3) == 0
    law = sxy_law(6, 2, 2, 3)
    assert any(x != 0 for (_, x, _), p in law.items() if p)


def test_sxy_path():
    path = simulate_sxy(50, 10, 5, 100, seed=1)
    assert path.shape == (101, 3)
    assert np.all(path[0] == 0)
    assert np.all(np.abs(np.diff(path, axis=0)) <= 1)


def test_path_csv(tmp_path):
    p = tmp_path / "z.csv"
    write_path_csv(p, simulate_zeta(20, 10, 3, 5), ["seed=0"])
    lines = p.read_text().splitlines()
    assert lines[:2] == ["# seed=0", "m,state"]
    assert lines[2] == "0,10"
    p2 = tmp_path / "sxy.csv"
    write_path_csv(p2, simulate_sxy(20, 10, 3, 5))
    assert p2.read_text().splitlines()[0] == "m,S,X,Y"


def test_dominating_walks():
    w = DominatingWalks(101, 10)
    assert w.nu == pytest.approx(0.1)
    assert w.w_max_tail(50, 0) == 1.0
    # exact maximal inequality for the symmetric walk
    for d in (2, 5, 8):
        assert w.w_max_tail(50, d) <= 4 * w.w_final_tail(50, d) + 1e-15
    assert w.n_tail(100, 1) == pytest.approx(1 - (1 - 1 / 101) ** 100)


def test_bound_example_values():
    n = 10_000
    rep = bound_evaluators(n, n // 2, 500, 10_000, 100)
    assert rep.zetamax_s_term == pytest.approx(8 * 1e4 * rep.q_j / 400**2)
    assert rep.zetamax_s_term == pytest.approx(0.125, rel=1e-3)
    assert rep.zetamax_w_term == pytest.approx(32 * 500 * 1e4 / (100**2 * (n - 1)))
    assert rep.zetamax_w_term == pytest.approx(1.6, rel=1e-3)
    # (t/n)((n-1)/n)/(delta/2 - t/n)^2 = 0.9999/49^2
    assert rep.zetamax_n_term == pytest.approx(0.9999 / 49**2, rel=1e-12)
    assert rep.zetamax_total == pytest.approx(rep.zetamax_s_term + rep.zetamax_w_term + rep.zetamax_n_term)


def test_bound_monotone_in_M():
    vals = [bound_evaluators(10_000, 5000, M, 10_000, 100) for M in (200, 400, 800, 1600)]
    s = [v.zetamax_s_term for v in vals]
    w = [v.zetamax_w_term for v in vals]
    assert s == sorted(s, reverse=True)
    assert w == sorted(w)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(10, 5000),
    st.floats(0.05, 0.95),
    st.integers(1, 200),
    st.integers(0, 5000),
    st.floats(0.5, 300),
    st.floats(-50, 50),
)
def test_bound_sandwich(n, frac, M, t, delta, u):
    j = max(1, int(frac * n))
    rep = bound_evaluators(n, j, M, t, delta, u)
    assert rep.upper >= rep.lower
    json.loads(rep.to_json())


def test_bound_vacuous_flags():
    rep = bound_evaluators(100, 50, 5, 1000, 10)
    assert rep.n_term_vacuous and rep.zetamax_vacuous
    assert rep.to_dict()["n_term"] is None
    assert len(rep.flags) == 2


def test_default_truncation():
    M, d = default_truncation(1000, 500, 2000)
    assert M == math.ceil(math.sqrt(1000) * math.log(1000))
    assert d == math.ceil(math.sqrt(2 * M) * math.log(1000))


def test_kernel_check_small():
    kc = kernel_check(30, 15, 100, 20_000, seed=2, min_count=20_000)
    assert kc.buckets
    assert kc.max_deviation < 0.015
    assert kc.counts[0].sum() == 0


def test_conditioned_sampler_matches_exact():
    n, j, t = 6, 2, 4
    reps = 200_000
    final = sample_conditioned(n, j, t, reps, seed=4)[:, 0]
    ref = exact_conditional_position(n, j, t)
    freq = np.bincount(final, minlength=n + 1)[1:] / reps
    se = np.sqrt(ref * (1 - ref) / reps)
    assert np.all(np.abs(freq - ref) <= 4 * se + 1e-12)


def test_rejection_agrees_with_kernel_sampler():
    n, j, t = 12, 4, 10
    a = sample_by_rejection(n, j, t, 100_000, seed=5)
    b = sample_conditioned(n, j, t, 40_000, seed=5)[:, 0]
    # two-sample chi-squared on the position counts
    ca = np.bincount(a, minlength=n + 1)[1:]
    cb = np.bincount(b, minlength=n + 1)[1:]
    keep = (ca + cb) > 0
    _, p, _, _ = stats.chi2_contingency(np.vstack([ca[keep], cb[keep]]))
    assert p > 1e-4


def test_truncated_sampler_maxdev():
    out = sample_conditioned(200, 100, 300, 5000, seed=1, M=4)
    assert np.all(out[:, 1] >= np.abs(out[:, 0] - 100))


def test_levy_domination_small():
    checks = levy_domination_check(300, 150, 15, 600, [3, 6], 20_000, seed=3)
    names = {c.name for c in checks}
    assert {"levy_S", "levy_W", "dominate_X_by_W", "dominate_Y_by_N", "Y_jump_rate"} <= names
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_levy_rejects_large_nu():
    with pytest.raises(ValueError):
        levy_domination_check(10, 5, 6, 10, [1], 100)
