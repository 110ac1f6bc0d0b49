"""Exact distributions for small decks.

Permutations are the card -> position maps ``sigma`` written as tuples
``(sigma(1), ..., sigma(n))`` and ranked by their Lehmer code, i.e. in
lexicographic order; rank 0 is the identity.

Everything that conditions on which cards are (not) removed works by
enumerating all ``n**2`` moves at every step and aggregating the surviving
move sequences by the tracked positions, with exact integer path counts that
are divided once at the end.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "CapExceededError",
    "DistributionVector",
    "PairLawTable",
    "ConditionedPairLaw",
    "rank",
    "unrank",
    "rank_many",
    "all_permutations",
    "evolve",
    "tv_to_uniform",
    "tv_curve",
    "write_tv_csv",
    "position_after_move",
    "exact_conditional_position",
    "exact_conditional_path_law",
    "exact_conditional_max_law",
    "exact_pair_law",
    "exact_pair_law_from_positions",
    "pair_start_positions",
    "conditioned_pair_law",
    "decomposition_mixture",
    "uniform_distinct_pairs",
]

MAX_EVOLVE_N = 8
MAX_CONDITIONAL_N = 6
MAX_CONDITIONAL_T = 5
MAX_PAIR_N = 7
MAX_PAIR_T = 4


class CapExceededError(ValueError):
    """The requested exact computation is larger than the configured cap."""


def _cap(name: str, value: int, cap: int) -> None:
    if value > cap:
        raise CapExceededError(f"{name}={value} exceeds the cap {cap}; raise the cap explicitly")


# --- ranking -----------------------------------------------------------------


def rank(sigma) -> int:
    """Lexicographic Lehmer rank of a permutation of 1..n (or 0..n-1)."""
    seq = list(sigma)
    n = len(seq)
    r = 0
    for k in range(n):
        smaller = sum(1 for x in seq[k + 1 :] if x < seq[k])
        r += smaller * math.factorial(n - 1 - k)
    return r


def unrank(n: int, r: int) -> np.ndarray:
    """Inverse of :func:`rank`, returning values in 1..n."""
    if not 0 <= r < math.factorial(n):
        raise ValueError(f"rank {r} outside [0, {n}! - 1]")
    pool = list(range(1, n + 1))
    out = []
    for k in range(n - 1, -1, -1):
        f = math.factorial(k)
        idx, r = divmod(r, f)
        out.append(pool.pop(idx))
    return np.array(out, dtype=np.int64)


def rank_many(perms: np.ndarray) -> np.ndarray:
    """Vectorised Lehmer rank of each row of ``perms``."""
    perms = np.asarray(perms)
    n = perms.shape[1]
    ranks = np.zeros(perms.shape[0], dtype=np.int64)
    for k in range(n):
        smaller = (perms[:, k + 1 :] < perms[:, k : k + 1]).sum(axis=1)
        ranks += smaller * math.factorial(n - 1 - k)
    return ranks


@lru_cache(maxsize=None)
def all_permutations(n: int) -> np.ndarray:
    """All ``n!`` permutations of 1..n as rows, row index = rank."""
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int8 if n < 100 else np.int64)
    perms.setflags(write=False)
    return perms


# --- distributions over S_n --------------------------------------------------


@dataclass
class DistributionVector:
    n: int
    probs: np.ndarray

    def check(self, tol: float = 1e-12) -> None:
        if self.probs.shape != (math.factorial(self.n),):
            raise ValueError("probability vector must have length n!")
        if (self.probs < 0).any():
            raise ValueError("negative probability")
        if abs(self.probs.sum() - 1.0) > tol:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}")

    @classmethod
    def point_mass(cls, n: int, sigma=None) -> DistributionVector:
        p = np.zeros(math.factorial(n))
        p[0 if sigma is None else rank(sigma)] = 1.0
        return cls(n, p)

    @classmethod
    def uniform(cls, n: int) -> DistributionVector:
        N = math.factorial(n)
        return cls(n, np.full(N, 1.0 / N))

    def prob(self, sigma) -> float:
        return float(self.probs[rank(sigma)])


def _moved(pos: np.ndarray, i: int, j: int) -> np.ndarray:
    out = pos.copy()
    if i < j:
        out[(pos > i) & (pos <= j)] -= 1
    elif j < i:
        out[(pos >= j) & (pos < i)] += 1
    out[pos == i] = j
    return out


def distinct_moves(n: int) -> list[tuple[int, int, float]]:
    """Distinct increments ``(i, j, weight)``; ``(i, i+1)`` and ``(i+1, i)`` coincide."""
    moves = [(1, 1, 1.0 / n)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j or (abs(i - j) == 1 and i > j):
                continue
            w = 2.0 / n**2 if abs(i - j) == 1 else 1.0 / n**2
            moves.append((i, j, w))
    return moves


@lru_cache(maxsize=4)
def _push_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    perms = all_permutations(n).astype(np.int64)
    moves = distinct_moves(n)
    dest = np.empty((len(moves), perms.shape[0]), dtype=np.int64)
    for k, (i, j, _) in enumerate(moves):
        dest[k] = rank_many(_moved(perms, i, j))
    weights = np.array([w for _, _, w in moves])
    return dest, weights


def _push(p: np.ndarray, dest: np.ndarray, weights: np.ndarray, workers: int) -> np.ndarray:
    N = p.shape[0]
    bounds = np.linspace(0, N, max(1, workers) + 1).astype(int)

    def part(lo_hi):
        lo, hi = lo_hi
        acc = np.zeros(N)
        src = p[lo:hi]
        for k in range(dest.shape[0]):
            acc[dest[k, lo:hi]] += weights[k] * src
        return acc

    chunks = list(zip(bounds[:-1], bounds[1:]))
    if workers <= 1:
        parts = [part(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(part, chunks))
    out = parts[0]
    for extra in parts[1:]:
        out = out + extra
    return out


def evolve(
    n: int,
    t: int,
    *,
    start: DistributionVector | None = None,
    max_n: int = MAX_EVOLVE_N,
    workers: int = 1,
) -> DistributionVector:
    """Exact law of the deck after ``t`` steps (identity start by default)."""
    _cap("n", n, max_n)
    if t < 0:
        raise ValueError("t must be non-negative")
    dist = DistributionVector.point_mass(n) if start is None else start
    dest, weights = _push_table(n)
    p = dist.probs.copy()
    for _ in range(t):
        p = _push(p, dest, weights, workers)
    return DistributionVector(n, p)


def tv_to_uniform(dist: DistributionVector) -> float:
    N = dist.probs.shape[0]
    return 0.5 * float(np.abs(dist.probs - 1.0 / N).sum())


def tv_curve(n: int, t_max: int, *, max_n: int = MAX_EVOLVE_N, workers: int = 1) -> np.ndarray:
    """``d_n(t)`` for ``t = 0..t_max``."""
    _cap("n", n, max_n)
    dest, weights = _push_table(n)
    p = DistributionVector.point_mass(n).probs
    out = [tv_to_uniform(DistributionVector(n, p))]
    for _ in range(t_max):
        p = _push(p, dest, weights, workers)
        out.append(tv_to_uniform(DistributionVector(n, p)))
    return np.array(out)


def write_tv_csv(path: str | Path, n: int, tvs, header_lines: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["n", "t", "tv"])
        for t, tv in enumerate(tvs):
            w.writerow([n, t, repr(float(tv))])


# --- conditioned single-card laws ---------------------------------------------


def position_after_move(p: int, i: int, j: int) -> int:
    """Position of the card at ``p`` after moving the card at ``i`` to ``j``."""
    if p == i:
        return j
    if i < j and i < p <= j:
        return p - 1
    if j < i and j <= p < i:
        return p + 1
    return p


def _enumerate_single(n: int, j: int, t: int, key_fn):
    """Aggregate surviving move sequences by ``key_fn(path_key, new_pos)``."""
    states: dict = {(j,): 1}
    for _ in range(t):
        nxt: dict = {}
        for key, count in states.items():
            pos = key[-1]
            for i in range(1, n + 1):
                if i == pos:
                    continue  # this move removes the tracked card
                for d in range(1, n + 1):
                    new = key_fn(key, position_after_move(pos, i, d))
                    nxt[new] = nxt.get(new, 0) + count
        states = nxt
    return states


def exact_conditional_position(
    n: int, j: int, t: int, *, max_n: int = MAX_CONDITIONAL_N, max_t: int = MAX_CONDITIONAL_T
) -> np.ndarray:
    """Law of the position of card ``j`` after ``t`` steps given it was never removed.

    Returns an array of length ``n``; entry ``p-1`` is the probability of
    position ``p``.
    """
    _cap("n", n, max_n)
    _cap("t", t, max_t)
    if not 1 <= j <= n:
        raise ValueError("card outside the deck")
    # key holds (last position,) only: counts stay exact integers
    states = _enumerate_single(n, j, t, lambda key, p: (p,))
    total = sum(states.values())
    out = np.zeros(n)
    for (p,), c in states.items():
        out[p - 1] = c / total
    return out


def exact_conditional_path_law(
    n: int, j: int, t: int, *, max_n: int = MAX_CONDITIONAL_N, max_t: int = MAX_CONDITIONAL_T
) -> dict[tuple[int, ...], Fraction]:
    """Exact law of the path ``(Pi_0(j), ..., Pi_t(j))`` given ``j`` is never removed."""
    _cap("n", n, max_n)
    _cap("t", t, max_t)
    states = _enumerate_single(n, j, t, lambda key, p: key + (p,))
    total = sum(states.values())
    return {k: Fraction(v, total) for k, v in states.items()}


def exact_conditional_max_law(n: int, j: int, t: int, **caps) -> dict[int, Fraction]:
    """Law of ``max_m |Pi_m(j) - j|`` given ``j`` is never removed."""
    out: dict[int, Fraction] = {}
    for path, p in exact_conditional_path_law(n, j, t, **caps).items():
        k = max(abs(x - j) for x in path)
        out[k] = out.get(k, 0) + p
    return out


# --- pair laws -----------------------------------------------------------------


@dataclass
class PairLawTable:
    """Joint law of the positions of cards ``i`` and ``j``; ``probs[a-1, b-1]``."""

    n: int
    i: int
    j: int
    t: int
    start: tuple[int, int]
    probs: np.ndarray

    def check(self, tol: float = 1e-12) -> None:
        if abs(self.probs.sum() - 1.0) > tol:
            raise ValueError("pair law does not sum to 1")
        if (self.probs < 0).any() or np.abs(np.diag(self.probs)).max() > 0:
            raise ValueError("pair law puts mass on a diagonal cell")

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# n={self.n} i={self.i} j={self.j} t'={self.t} start={self.start[0]},{self.start[1]}\n")
            w = csv.writer(fh)
            w.writerow(["m1", "m2", "p"])
            for a in range(self.n):
                for b in range(self.n):
                    if self.probs[a, b] > 0:
                        w.writerow([a + 1, b + 1, repr(float(self.probs[a, b]))])


def pair_start_positions(n: int, m1: int, m2: int) -> tuple[int, int]:
    """Positions of cards (i, j) when j is inserted at ``m2`` into an (n-1)-deck with i at ``m1``."""
    if not (1 <= m1 <= n - 1 and 1 <= m2 <= n):
        raise ValueError("need 1 <= m1 <= n-1 and 1 <= m2 <= n")
    return (m1 + 1 if m2 <= m1 else m1), m2


def _pair_counts(n: int, start: tuple[int, int], t: int) -> dict[tuple[int, int], int]:
    states = {start: 1}
    for _ in range(t):
        nxt: dict = {}
        for (pi, pj), count in states.items():
            for r in range(1, n + 1):
                if r == pi or r == pj:
                    continue
                for d in range(1, n + 1):
                    key = (position_after_move(pi, r, d), position_after_move(pj, r, d))
                    nxt[key] = nxt.get(key, 0) + count
        states = nxt
    return states


def exact_pair_law_from_positions(
    n: int, pos_i: int, pos_j: int, t: int, *, i: int = 0, j: int = 0,
    max_n: int = MAX_PAIR_N, max_t: int = MAX_PAIR_T,
) -> PairLawTable:
    """Pair law after ``t`` steps from explicit starting positions, neither card removed."""
    _cap("n", n, max_n)
    _cap("t", t, max_t)
    if pos_i == pos_j:
        raise ValueError("the two cards need distinct positions")
    counts = _pair_counts(n, (pos_i, pos_j), t)
    total = sum(counts.values())
    probs = np.zeros((n, n))
    for (a, b), c in counts.items():
        probs[a - 1, b - 1] = c / total
    return PairLawTable(n, i, j, t, (pos_i, pos_j), probs)


def exact_pair_law(
    n: int, i: int, j: int, t: int, start: tuple[int, int], **caps
) -> PairLawTable:
    """``P^{n,t}_{m1,m2}``: the pair law of cards i, j from the (m1, m2) start.

    ``m1`` is the position of ``i`` in the deck without ``j`` and ``m2`` is the
    position at which ``j`` is inserted; see :func:`pair_start_positions`.
    """
    if i == j:
        raise ValueError("i and j must differ")
    pi, pj = pair_start_positions(n, *start)
    table = exact_pair_law_from_positions(n, pi, pj, t, i=i, j=j, **caps)
    table.start = tuple(start)
    return table


def uniform_distinct_pairs(n: int) -> np.ndarray:
    u = np.full((n, n), 1.0 / (n * (n - 1)))
    np.fill_diagonal(u, 0.0)
    return u


@dataclass
class ConditionedPairLaw:
    """Laws conditioned on the last removal times of i and j being t1 and t2."""

    n: int
    t: int
    t1: int
    t2: int
    mu: np.ndarray  # law of (Pi_t(i), Pi_t(j))
    q_plus: np.ndarray  # q_plus[m-1] = P(Pi_{t2-1}(i) = m, Pi_{t2-1}(j) > m | ...)
    q_minus: np.ndarray
    law_i_before: np.ndarray  # law of Pi_{t2-1}(i)


def conditioned_pair_law(
    n: int, i: int, j: int, t: int, t1: int, t2: int, *, max_n: int = MAX_PAIR_N, max_t: int = 6
) -> ConditionedPairLaw:
    """Enumerate the identity-start shuffle conditioned on ``tau_i = t1`` and ``tau_j = t2``."""
    _cap("n", n, max_n)
    _cap("t", t, max_t)
    if i == j or not (1 <= t1 < t2 <= t):
        raise ValueError("need i != j and 1 <= t1 < t2 <= t")
    # state: (pos_i, pos_j, tag); tag = (pos_i, +1/-1) at time t2-1, fixed afterwards
    states: dict = {}
    tag0 = (i, 1 if j > i else -1) if t2 == 1 else None
    states[(i, j, tag0)] = 1
    for s in range(1, t + 1):
        nxt: dict = {}
        for (pi, pj, tag), count in states.items():
            for r in range(1, n + 1):
                if s == t1 and r != pi:
                    continue
                if s > t1 and r == pi:
                    continue
                if s == t2 and r != pj:
                    continue
                if s > t2 and r == pj:
                    continue
                for d in range(1, n + 1):
                    a = position_after_move(pi, r, d)
                    b = position_after_move(pj, r, d)
                    new_tag = tag
                    if s == t2 - 1:
                        new_tag = (a, 1 if b > a else -1)
                    key = (a, b, new_tag)
                    nxt[key] = nxt.get(key, 0) + count
        states = nxt
    total = sum(states.values())
    mu = np.zeros((n, n))
    q_plus = np.zeros(n)
    q_minus = np.zeros(n)
    for (a, b, (m, sign)), c in states.items():
        p = c / total
        mu[a - 1, b - 1] += p
        if sign > 0:
            q_plus[m - 1] += p
        else:
            q_minus[m - 1] += p
    return ConditionedPairLaw(n, t, t1, t2, mu, q_plus, q_minus, q_plus + q_minus)


def decomposition_mixture(n: int, steps_after: int, q_plus: np.ndarray, q_minus: np.ndarray, **caps) -> np.ndarray:
    """Right-hand side of the pair-law decomposition.

    ``(1/n) sum_{m2} [sum_{m1<=n-1} q+_{m1} P_{m1,m2} + sum_{m1>=2} q-_{m1} P_{m1-1,m2}]``
    with ``P`` the pair laws over ``steps_after`` further steps.
    """
    out = np.zeros((n, n))
    for m2 in range(1, n + 1):
        for m1 in range(1, n):
            law = exact_pair_law(n, 1, 2, steps_after, (m1, m2), **caps).probs
            out += (q_plus[m1 - 1] + q_minus[m1]) * law / n
    return out
