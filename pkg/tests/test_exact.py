import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shufflelab.chains import ConditionalKernel
from shufflelab.exact import (
    CapExceededError,
    DistributionVector,
    all_permutations,
    conditioned_pair_law,
    decomposition_mixture,
    distinct_moves,
    evolve,
    exact_conditional_path_law,
    exact_conditional_position,
    exact_pair_law,
    exact_pair_law_from_positions,
    pair_start_positions,
    position_after_move,
    rank,
    rank_many,
    tv_curve,
    tv_to_uniform,
    uniform_distinct_pairs,
    unrank,
    write_tv_csv,
)


def dense_kernel(n):
    """n! x n! one-step matrix built from plain list moves, row = source rank."""
    perms = list(itertools.permutations(range(1, n + 1)))  # lexicographic orders
    index = {p: k for k, p in enumerate(perms)}
    # perms here are orders (position -> card); convert to sigma ranks
    def sigma_of(order):
        sig = [0] * n
        for pos, card in enumerate(order, start=1):
            sig[card - 1] = pos
        return tuple(sig)

    sigma_rank = {o: index[sigma_of(o)] for o in perms}
    P = np.zeros((len(perms), len(perms)))
    for o in perms:
        for i in range(n):
            for j in range(n):
                lst = list(o)
                c = lst.pop(i)
                lst.insert(j, c)
                P[sigma_rank[o], sigma_rank[tuple(lst)]] += 1 / n**2
    return P


def test_rank_examples():
    assert rank([1, 2, 3]) == 0
    assert rank([3, 2, 1]) == 5
    assert list(unrank(4, 23)) == [4, 3, 2, 1]
    assert np.array_equal(all_permutations(3)[2], [2, 1, 3])


@given(st.integers(1, 9).flatmap(lambda n: st.permutations(list(range(1, n + 1)))))
def test_rank_unrank_roundtrip(perm):
    r = rank(perm)
    assert 0 <= r < math.factorial(len(perm))
    assert list(unrank(len(perm), r)) == list(perm)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_rank_is_bijection(n):
    perms = all_permutations(n)
    assert np.array_equal(rank_many(perms), np.arange(math.factorial(n)))


def test_distinct_move_weights():
    for n in range(2, 7):
        moves = distinct_moves(n)
        assert sum(w for *_, w in moves) == pytest.approx(1.0, abs=1e-15)


def test_one_step_table_n3():
    p = evolve(3, 1).probs
    assert p[0] == pytest.approx(1 / 3, abs=1e-15)
    assert sorted(p[1:]) == pytest.approx([0.0, 1 / 9, 1 / 9, 2 / 9, 2 / 9], abs=1e-15)
    # adjacent transpositions carry 2/9
    assert p[rank([2, 1, 3])] == pytest.approx(2 / 9)
    assert p[rank([1, 3, 2])] == pytest.approx(2 / 9)
    assert p[rank([3, 2, 1])] == 0.0


def test_evolve_zero_steps():
    d = evolve(4, 0)
    assert d.probs[0] == 1.0 and d.probs.sum() == 1.0


@pytest.mark.parametrize("n,t", [(3, 4), (4, 7), (5, 20)])
def test_evolve_matches_dense_oracle(n, t):
    P = dense_kernel(n)
    v = np.zeros(P.shape[0])
    v[0] = 1.0
    for _ in range(t):
        v = v @ P
    assert np.abs(evolve(n, t).probs - v).max() < 1e-10


def test_evolve_from_arbitrary_start():
    P = dense_kernel(4)
    rng = np.random.default_rng(0)
    start = rng.random(24)
    start /= start.sum()
    got = evolve(4, 3, start=DistributionVector(4, start)).probs
    assert np.abs(got - start @ P @ P @ P).max() < 1e-12


def test_evolve_invariants():
    d = DistributionVector.point_mass(5)
    for t in range(6):
        d = evolve(5, 1, start=d)
        d.check()
    u = evolve(6, 1, start=DistributionVector.uniform(6))
    assert np.abs(u.probs - 1 / 720).max() < 1e-12


def test_evolve_worker_invariance():
    a = evolve(6, 4, workers=1).probs
    b = evolve(6, 4, workers=3).probs
    assert np.abs(a - b).max() < 1e-12


def test_evolve_cap():
    with pytest.raises(CapExceededError):
        evolve(9, 1)


def test_tv_examples():
    assert tv_to_uniform(DistributionVector.point_mass(4)) == pytest.approx(1 - 1 / 24)
    assert tv_to_uniform(DistributionVector.uniform(5)) == pytest.approx(0.0, abs=1e-15)


def test_tv_curve_n5():
    tv = tv_curve(5, 60)
    assert tv[0] == pytest.approx(1 - 1 / 120)
    assert np.all(np.diff(tv) <= 1e-15)
    assert tv[60] < 0.05


def test_tv_csv(tmp_path):
    path = tmp_path / "tv.csv"
    write_tv_csv(path, 4, tv_curve(4, 3), ["seed=0"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=0" and lines[1] == "n,t,tv"
    assert lines[2].startswith("4,0,0.958")


@given(st.integers(1, 10).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(1, n), st.integers(1, n))))
def test_position_after_move_matches_list(args):
    n, p, i, j = args
    order = list(range(1, n + 1))
    lst = order.copy()
    c = lst.pop(i - 1)
    lst.insert(j - 1, c)
    assert lst.index(p) + 1 == position_after_move(p, i, j)


def test_conditional_position_examples():
    assert list(exact_conditional_position(5, 3, 0)) == [0, 0, 1, 0, 0]
    law = exact_conditional_position(4, 2, 1)
    assert law[:3] == pytest.approx([1 / 4, 5 / 12, 1 / 3], abs=1e-15)


@pytest.mark.parametrize("n,j,t", [(5, 3, 3), (4, 1, 3), (6, 2, 3), (3, 2, 2)])
def test_conditional_position_equals_kernel_power(n, j, t):
    law = exact_conditional_position(n, j, t)
    assert np.abs(law - ConditionalKernel(n, j).law(t)).max() < 1e-12


def test_conditional_path_law_is_exact():
    law = exact_conditional_path_law(4, 2, 2)
    assert sum(law.values()) == 1
    assert all(isinstance(p, Fraction) for p in law.values())
    assert all(path[0] == 2 for path in law)


def test_conditional_caps():
    with pytest.raises(CapExceededError):
        exact_conditional_position(7, 2, 1)
    with pytest.raises(CapExceededError):
        exact_conditional_position(5, 2, 6)


def test_pair_law_zero_steps():
    table = exact_pair_law(5, 1, 2, 0, (2, 4))
    pi, pj = pair_start_positions(5, 2, 4)
    assert table.probs[pi - 1, pj - 1] == 1.0
    table.check()


def test_pair_law_rejects_equal_cards():
    with pytest.raises(ValueError):
        exact_pair_law(5, 2, 2, 1, (1, 1))


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 6).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1), st.integers(1, n), st.integers(0, 2))))
def test_pair_law_invariants(args):
    n, m1, m2, t = args
    table = exact_pair_law(n, 1, 2, t, (m1, m2))
    table.check()
    assert np.all(np.diag(table.probs) == 0)


def test_pair_stationarity():
    n, t = 5, 2
    acc = np.zeros((n, n))
    for pi in range(1, n + 1):
        for pj in range(1, n + 1):
            if pi != pj:
                acc += exact_pair_law_from_positions(n, pi, pj, t).probs
    acc /= n * (n - 1)
    assert np.abs(acc - uniform_distinct_pairs(n)).max() < 1e-12


def test_pair_csv(tmp_path):
    table = exact_pair_law(4, 1, 3, 1, (1, 3))
    path = tmp_path / "pair.csv"
    table.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# n=4 i=1 j=3")
    assert lines[1] == "m1,m2,p"
    assert sum(float(x.split(",")[2]) for x in lines[2:]) == pytest.approx(1.0)


@pytest.mark.parametrize("t,t1,t2", [(4, 1, 2), (4, 2, 3), (4, 1, 3), (3, 1, 2)])
def test_decomposition_identity(t, t1, t2):
    n = 5
    law = conditioned_pair_law(n, 2, 4, t, t1, t2)
    assert np.abs(law.q_plus + law.q_minus - 1 / n).max() < 1e-12
    assert np.abs(law.law_i_before - 1 / n).max() < 1e-12
    rhs = decomposition_mixture(n, t - t2, law.q_plus, law.q_minus)
    assert np.abs(law.mu - rhs).max() < 1e-10
