"""Paired-deck couplings with online invariant monitors.

Decks A and B
    B starts as A with card ``i`` swapped with its upper ("+", position one
    lower) or lower ("-") neighbour.  Each step removes a card other than
    ``i``, ``j`` from A, removes from B the card with the same rank among
    B's cards other than ``i``, ``j`` and reinserts both at the same
    position.  Card ``j`` then occupies the same position in both decks and
    ``B(i) <= A(i)`` on the "+" branch (``>=`` on "-").

Decks 1 and 2
    Deck 1 has ``n`` cards with ``i`` at position 1 and ``j`` at ``m + 1``;
    deck 2 has ``n - 1`` cards in order with ``m`` marked.  Removals are
    paired through a rank bijection and reinsertions through one uniform
    draw so that ``J - I <= M <= J - 1`` holds at every step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from numba import njit

from ._parallel import map_chunks
from .deck import Deck, Trajectory, replay
from .exact import (
    exact_conditional_position,
    exact_pair_law_from_positions,
)
from .chains import sample_conditioned

__all__ = [
    "CouplingError",
    "PairedDecksAB",
    "init_AB",
    "init_AB_from_trajectory",
    "step_AB",
    "random_step_AB",
    "exact_AB_marginals",
    "conditioned_deck_law",
    "PairedDecks12",
    "StepRecord12",
    "init_12",
    "step_12",
    "exact_12_law",
    "MonitorSummary",
    "monitor_AB",
    "monitor_12",
    "write_monitor_csv",
    "TailDomination",
    "tail_domination_check",
]


class CouplingError(ValueError):
    """A coupling was asked to do something its construction forbids."""


def _move_list(order: list[int], i: int, d: int) -> list[int]:
    out = list(order)
    c = out.pop(i - 1)
    out.insert(d - 1, c)
    return out


def _unmarked_rank(order: list[int], card: int, marked) -> int:
    r = 0
    for c in order:
        if c in marked:
            continue
        r += 1
        if c == card:
            return r
    raise KeyError(card)


def _position_of_rank(order: list[int], rank: int, marked) -> int:
    r = 0
    for p, c in enumerate(order, start=1):
        if c in marked:
            continue
        r += 1
        if r == rank:
            return p
    raise KeyError(rank)


# --- decks A and B ----------------------------------------------------------------


@dataclass(frozen=True)
class PairedDecksAB:
    """Decks as top-to-bottom card lists; ``branch`` is ``"+"`` or ``"-"``."""

    A: tuple[int, ...]
    B: tuple[int, ...]
    i: int
    j: int
    branch: str
    steps: int = 0

    @property
    def n(self) -> int:
        return len(self.A)

    def pos(self, deck: str, card: int) -> int:
        return (self.A if deck == "A" else self.B).index(card) + 1

    def match(self, card: int) -> int:
        """Card of B matched with ``card`` of A (same rank among unmarked cards)."""
        marked = (self.i, self.j)
        if card in marked:
            raise CouplingError("marked cards are never matched")
        r = _unmarked_rank(list(self.A), card, marked)
        return self.B[_position_of_rank(list(self.B), r, marked) - 1]

    def violations(self) -> list[str]:
        """Full-scan check of both decks and the position relations."""
        out = []
        n = self.n
        for name, deck in (("A", self.A), ("B", self.B)):
            if sorted(deck) != list(range(1, n + 1)):
                out.append(f"deck {name} is not a permutation")
        if out:
            return out
        if self.pos("A", self.j) != self.pos("B", self.j):
            out.append("card j positions differ")
        ai, bi = self.pos("A", self.i), self.pos("B", self.i)
        if self.branch == "+" and not bi <= ai:
            out.append("B(i) > A(i) on the + branch")
        if self.branch == "-" and not bi >= ai:
            out.append("B(i) < A(i) on the - branch")
        # the rank matching must be a bijection of the unmarked cards
        marked = {self.i, self.j}
        ua = [c for c in self.A if c not in marked]
        ub = [c for c in self.B if c not in marked]
        if sorted(ua) != sorted(ub):
            out.append("unmarked card sets differ")
        return out


def init_AB(deck: Deck, i: int, j: int, branch: str) -> PairedDecksAB:
    """Start the pair from deck A at the time ``j`` was last removed."""
    if branch not in ("+", "-"):
        raise CouplingError("branch must be '+' or '-'")
    if i == j:
        raise CouplingError("i and j must differ")
    order = [int(c) for c in deck.order]
    n = len(order)
    p = order.index(i) + 1
    q = p - 1 if branch == "+" else p + 1
    if not 1 <= q <= n:
        raise CouplingError(f"card i sits at the deck edge; the {branch} branch has no neighbour")
    if order[q - 1] == j:
        raise CouplingError("the neighbour to swap with is card j")
    B = list(order)
    B[p - 1], B[q - 1] = B[q - 1], B[p - 1]
    return PairedDecksAB(tuple(order), tuple(B), i, j, branch)


def init_AB_from_trajectory(prefix: Trajectory, i: int, j: int, branch: str) -> PairedDecksAB:
    """Start from the deck after ``prefix``, whose last step must remove ``j``.

    The branch event requires card ``i`` at some ``m`` in ``2..n-1`` one step
    earlier, with ``j`` above it ("+", larger position) or below it ("-"),
    and ``j`` not reinserted at ``m``.
    """
    if len(prefix) == 0:
        raise CouplingError("empty trajectory prefix")
    c_last, d_last = (int(x) for x in prefix.steps[-1])
    if c_last != j:
        raise CouplingError("the last step of the prefix must remove card j")
    before, _ = replay(Trajectory(prefix.n, prefix.seed, prefix.steps[:-1]))
    after, _ = replay(prefix)
    m = before.position_of(i)
    pj = before.position_of(j)
    n = prefix.n
    if not 2 <= m <= n - 1:
        raise CouplingError("card i at the deck edge one step before j's removal")
    if (branch == "+" and not pj > m) or (branch == "-" and not pj < m):
        raise CouplingError(f"configuration is not in the {branch} branch event")
    if after.position_of(j) == m:
        raise CouplingError("card j was reinserted at i's earlier position")
    return init_AB(after, i, j, branch)


def step_AB(pair: PairedDecksAB, removal: int, d: int) -> PairedDecksAB:
    """Remove the card at position ``removal`` of A and its match in B; reinsert both at ``d``."""
    n = pair.n
    if not (1 <= removal <= n and 1 <= d <= n):
        raise CouplingError("move outside the deck")
    card = pair.A[removal - 1]
    if card in (pair.i, pair.j):
        raise CouplingError("cards i and j are never removed")
    partner = pair.match(card)
    pb = pair.B.index(partner) + 1
    A = _move_list(list(pair.A), removal, d)
    B = _move_list(list(pair.B), pb, d)
    return PairedDecksAB(tuple(A), tuple(B), pair.i, pair.j, pair.branch, pair.steps + 1)


def random_step_AB(pair: PairedDecksAB, rng: np.random.Generator) -> PairedDecksAB:
    """Removal uniform over A's unmarked cards, reinsertion uniform on [n]."""
    n = pair.n
    rank = int(rng.random() * (n - 2)) + 1
    removal = _position_of_rank(list(pair.A), rank, (pair.i, pair.j))
    d = int(rng.random() * n) + 1
    return step_AB(pair, removal, d)


def conditioned_deck_law(order, marked, t: int) -> dict[tuple[int, ...], Fraction]:
    """Exact law of a deck after ``t`` steps that never remove a ``marked`` card."""
    n = len(order)
    law = {tuple(order): Fraction(1)}
    for _ in range(t):
        nxt: dict = {}
        for deck, p in law.items():
            moves = [(r, d) for r in range(1, n + 1) if deck[r - 1] not in marked for d in range(1, n + 1)]
            w = p / len(moves)
            for r, d in moves:
                key = tuple(_move_list(list(deck), r, d))
                nxt[key] = nxt.get(key, 0) + w
        law = nxt
    return law


def exact_AB_marginals(pair: PairedDecksAB, t: int):
    """Exact marginal laws of decks A and B after ``t`` coupled steps."""
    n = pair.n
    law = {pair: Fraction(1)}
    for _ in range(t):
        nxt: dict = {}
        for pr, p in law.items():
            moves = [(r, d) for r in range(1, n + 1) if pr.A[r - 1] not in (pr.i, pr.j) for d in range(1, n + 1)]
            w = p / len(moves)
            for r, d in moves:
                q = step_AB(pr, r, d)
                key = PairedDecksAB(q.A, q.B, q.i, q.j, q.branch, 0)
                nxt[key] = nxt.get(key, 0) + w
        law = nxt
    la: dict = {}
    lb: dict = {}
    for pr, p in law.items():
        la[pr.A] = la.get(pr.A, 0) + p
        lb[pr.B] = lb.get(pr.B, 0) + p
    return la, lb


# --- decks 1 and 2 ---------------------------------------------------------------------


@dataclass(frozen=True)
class PairedDecks12:
    deck1: tuple[int, ...]
    deck2: tuple[int, ...]
    i: int
    j: int
    m: int
    steps: int = 0

    @property
    def n(self) -> int:
        return len(self.deck1)

    @property
    def I(self) -> int:  # noqa: E743 - matches the usual notation
        return self.deck1.index(self.i) + 1

    @property
    def J(self) -> int:
        return self.deck1.index(self.j) + 1

    @property
    def M(self) -> int:
        return self.deck2.index(self.m) + 1

    def sandwich_ok(self) -> bool:
        return self.J - self.I <= self.M <= self.J - 1


@dataclass(frozen=True)
class StepRecord12:
    p1: Fraction
    p2: Fraction
    p3: Fraction
    V1: int
    V2: int
    V3: int
    violation: bool


def init_12(n: int, m: int, i: int = 1, j: int = 2) -> PairedDecks12:
    """Deck 1: ``i`` on top, ``j`` at ``m + 1``, other cards in increasing order."""
    if not 1 <= m <= n - 1:
        raise CouplingError("need 1 <= m <= n - 1")
    if i == j or not (1 <= i <= n and 1 <= j <= n):
        raise CouplingError("need distinct cards i, j in [n]")
    rest = [c for c in range(1, n + 1) if c not in (i, j)]
    deck1 = [i] + rest[: m - 1] + [j] + rest[m - 1 :]
    return PairedDecks12(tuple(deck1), tuple(range(1, n)), i, j, m)


def _image_rank(rho: int, I: int, J: int, M: int) -> int:
    """Rank in deck 2 (among cards other than m) paired with rank ``rho`` of deck 1."""
    a = M - J + I  # cards above i that map above m
    if rho <= a:
        return rho
    if rho < I:
        return M + (rho - a - 1)
    if rho <= J - 2:
        return a + (rho - I + 1)
    return rho


def _rank_position(rank: int, marks) -> int:
    # position of the unmarked card of given rank, with marked positions sorted ascending
    p = rank
    for q in marks:
        if q <= p:
            p += 1
    return p


def step_12(pair: PairedDecks12, rng: np.random.Generator) -> tuple[PairedDecks12, StepRecord12]:
    """One coupled step; four uniforms are drawn in a fixed order."""
    n = pair.n
    I, J, M = pair.I, pair.J, pair.M
    if not J - I <= M <= J - 1:
        raise CouplingError("sandwich does not hold at entry")
    rho = int(rng.random() * (n - 2)) + 1
    pos1 = _rank_position(rho, (I, J))
    pos2 = _rank_position(_image_rank(rho, I, J, M), (M,))
    Ib, Jb, Mb = I - (pos1 < I), J - (pos1 < J), M - (pos2 < M)
    p1, p2, p3 = Fraction(Jb - Ib, n), Fraction(Mb, n - 1), Fraction(Jb, n)
    if not p1 <= p2 <= p3:
        raise AssertionError("p1 <= p2 <= p3 violated")
    u = rng.random()
    V1, V2, V3 = int(u < p1), int(u < p2), int(u < p3)
    r = rng.random()
    if V1:
        d1 = Ib + 1 + int(r * (Jb - Ib))
    elif V3:
        d1 = 1 + int(r * Ib)
    else:
        d1 = Jb + 1 + int(r * (n - Jb))
    r = rng.random()
    d2 = 1 + int(r * Mb) if V2 else Mb + 1 + int(r * (n - 1 - Mb))
    deck1 = _move_list(list(pair.deck1), pos1, d1)
    deck2 = _move_list(list(pair.deck2), pos2, d2)
    out = PairedDecks12(tuple(deck1), tuple(deck2), pair.i, pair.j, pair.m, pair.steps + 1)
    return out, StepRecord12(p1, p2, p3, V1, V2, V3, not out.sandwich_ok() or V1 > V3)


def exact_12_law(n: int, m: int, t: int) -> dict[tuple[int, int, int], Fraction]:
    """Exact law of ``(I_t, J_t, M_t)`` under the coupling."""
    law = {(1, m + 1, m): Fraction(1)}
    for _ in range(t):
        nxt: dict = {}
        for (I, J, M), p in law.items():
            for rho in range(1, n - 1):
                pos1 = _rank_position(rho, (I, J))
                pos2 = _rank_position(_image_rank(rho, I, J, M), (M,))
                Ib, Jb, Mb = I - (pos1 < I), J - (pos1 < J), M - (pos2 < M)
                p1, p2, p3 = Fraction(Jb - Ib, n), Fraction(Mb, n - 1), Fraction(Jb, n)
                w = p / (n - 2)
                for key, q in (
                    ((Ib, Jb + 1, Mb + 1), p1),
                    ((Ib + 1, Jb + 1, Mb + 1), p2 - p1),
                    ((Ib + 1, Jb + 1, Mb), p3 - p2),
                    ((Ib, Jb, Mb), 1 - p3),
                ):
                    if q:
                        nxt[key] = nxt.get(key, 0) + w * q
        law = nxt
    return law


# --- compiled monitors --------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _arr_move(order, pos, i, d):
    c = order[i]
    if i < d:
        for p in range(i, d):
            order[p] = order[p + 1]
            pos[order[p]] = p
    else:
        for p in range(i, d, -1):
            order[p] = order[p - 1]
            pos[order[p]] = p
    order[d] = c
    pos[c] = d


@njit(cache=True, nogil=True)
def _nth_unmarked(order, n, rank, a, b):
    r = 0
    for p in range(1, n + 1):
        c = order[p]
        if c == a or c == b:
            continue
        r += 1
        if r == rank:
            return p
    return -1


@njit(cache=True, nogil=True)
def _unmarked_before(order, p, a, b):
    r = 0
    for q in range(1, p):
        c = order[q]
        if c != a and c != b:
            r += 1
    return r


@njit(cache=True, nogil=True)
def _ab_batch(n, runs, steps, rng, out):
    """out[r] = (#bijection failures, #j mismatches, #i order failures, #rank mismatches)."""
    A = np.empty(n + 1, dtype=np.int64)
    B = np.empty(n + 1, dtype=np.int64)
    pa = np.empty(n + 1, dtype=np.int64)
    pb = np.empty(n + 1, dtype=np.int64)
    seen = np.empty(n + 1, dtype=np.int64)
    for r in range(runs):
        # uniformly random deck A, marked cards and a valid branch
        for p in range(1, n + 1):
            A[p] = p
        for p in range(n, 1, -1):
            q = int(rng.random() * p) + 1
            A[p], A[q] = A[q], A[p]
        while True:
            ci = int(rng.random() * n) + 1
            cj = int(rng.random() * (n - 1)) + 1
            if cj >= ci:
                cj += 1
            sgn = 1 if rng.random() < 0.5 else -1
            p = 0
            for q in range(1, n + 1):
                if A[q] == ci:
                    p = q
            q = p - sgn  # "+" swaps with the card one position lower
            if 1 <= q <= n and A[q] != cj:
                break
        for s in range(1, n + 1):
            B[s] = A[s]
        B[p], B[q] = B[q], B[p]
        for s in range(1, n + 1):
            pa[A[s]] = s
            pb[B[s]] = s
        for _ in range(steps):
            rank = int(rng.random() * (n - 2)) + 1
            d = int(rng.random() * n) + 1
            xa = _nth_unmarked(A, n, rank, ci, cj)
            xb = _nth_unmarked(B, n, rank, ci, cj)
            if _unmarked_before(A, xa, ci, cj) != _unmarked_before(B, xb, ci, cj):
                out[r, 3] += 1
            _arr_move(A, pa, xa, d)
            _arr_move(B, pb, xb, d)
            # full scan: both decks are bijections consistent with their position maps
            for s in range(1, n + 1):
                seen[s] = 0
            bad = False
            for s in range(1, n + 1):
                seen[A[s]] += 1
                if pa[A[s]] != s or pb[B[s]] != s:
                    bad = True
            for s in range(1, n + 1):
                if seen[s] != 1:
                    bad = True
            if bad:
                out[r, 0] += 1
            if pa[cj] != pb[cj]:
                out[r, 1] += 1
            if (sgn > 0 and pb[ci] > pa[ci]) or (sgn < 0 and pb[ci] < pa[ci]):
                out[r, 2] += 1


@njit(cache=True, nogil=True)
def _rank_pos(rank, m1, m2):
    p = rank
    if m1 <= p:
        p += 1
    if m2 <= p:
        p += 1
    return p


@njit(cache=True, nogil=True)
def _step12(n, d1arr, p1arr, d2arr, p2arr, ci, cj, cm, rng, stats):
    """One coupled step on array decks; returns (I, J, M) afterwards."""
    I = p1arr[ci]
    J = p1arr[cj]
    M = p2arr[cm]
    rho = int(rng.random() * (n - 2)) + 1
    pos1 = _rank_pos(rho, I, J)
    a = M - J + I
    if rho <= a:
        r2 = rho
    elif rho < I:
        r2 = M + (rho - a - 1)
    elif rho <= J - 2:
        r2 = a + (rho - I + 1)
    else:
        r2 = rho
    pos2 = r2 if r2 < M else r2 + 1
    Ib = I - (1 if pos1 < I else 0)
    Jb = J - (1 if pos1 < J else 0)
    Mb = M - (1 if pos2 < M else 0)
    # p1 <= p2 <= p3 in exact integer arithmetic
    if (Jb - Ib) * (n - 1) > Mb * n or Mb * n > Jb * (n - 1):
        stats[1] += 1
    u = rng.random()
    V1 = 1 if u * n < (Jb - Ib) else 0
    V2 = 1 if u * (n - 1) < Mb else 0
    V3 = 1 if u * n < Jb else 0
    if V1 > V3:
        stats[2] += 1
    r = rng.random()
    if V1 == 1:
        d1 = Ib + 1 + int(r * (Jb - Ib))
    elif V3 == 1:
        d1 = 1 + int(r * Ib)
    else:
        d1 = Jb + 1 + int(r * (n - Jb))
    r = rng.random()
    if V2 == 1:
        d2 = 1 + int(r * Mb)
    else:
        d2 = Mb + 1 + int(r * (n - 1 - Mb))
    _arr_move(d1arr, p1arr, pos1, d1)
    _arr_move(d2arr, p2arr, pos2, d2)
    I = p1arr[ci]
    J = p1arr[cj]
    M = p2arr[cm]
    if not (J - I <= M and M <= J - 1):
        stats[0] += 1
    return I, J, M


@njit(cache=True, nogil=True)
def _12_batch(n, m, runs, steps, rng, out, log):
    """out[r] = (sandwich violations, p-order violations, V1>V3 count, I_t, J_t, M_t).

    When ``log`` has ``steps + 1`` rows it receives the first run's (I, J, M, flag) per step.
    """
    d1 = np.empty(n + 1, dtype=np.int64)
    p1 = np.empty(n + 1, dtype=np.int64)
    d2 = np.empty(n, dtype=np.int64)
    p2 = np.empty(n, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    record = log.shape[0] == steps + 1
    for r in range(runs):
        # card i = 1 on top, card j = 2 at m + 1, the rest in order
        d1[1] = 1
        k = 3
        for p in range(2, n + 1):
            if p == m + 1:
                d1[p] = 2
            else:
                d1[p] = k
                k += 1
        for p in range(1, n + 1):
            p1[d1[p]] = p
        for p in range(1, n):
            d2[p] = p
            p2[p] = p
        stats[:] = 0
        I, J, M = 1, m + 1, m
        if record and r == 0:
            log[0, 0] = I
            log[0, 1] = J
            log[0, 2] = M
        for s in range(steps):
            before = stats[0] + stats[1] + stats[2]
            I, J, M = _step12(n, d1, p1, d2, p2, 1, 2, m, rng, stats)
            if record and r == 0:
                log[s + 1, 0] = I
                log[s + 1, 1] = J
                log[s + 1, 2] = M
                log[s + 1, 3] = 1 if stats[0] + stats[1] + stats[2] > before else 0
        out[r, 0] = stats[0]
        out[r, 1] = stats[1]
        out[r, 2] = stats[2]
        out[r, 3] = I
        out[r, 4] = J
        out[r, 5] = M


@dataclass
class MonitorSummary:
    name: str
    n: int
    runs: int
    steps: int
    violations: dict[str, int]
    finals: np.ndarray | None = field(default=None, repr=False)
    log: np.ndarray | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(v == 0 for v in self.violations.values())


def monitor_AB(n: int, runs: int, steps: int, seed: int = 0, workers: int = 1) -> MonitorSummary:
    """Random A/B runs from uniformly random starting decks, counting invariant failures."""
    if n < 4:
        raise ValueError("need n >= 4")

    def fn(rng, lo, cnt):
        out = np.zeros((cnt, 4), dtype=np.int64)
        _ab_batch(n, cnt, steps, rng, out)
        return out

    res = map_chunks(fn, runs, seed, f"coupling-ab:{n}:{steps}", workers)
    tot = res.sum(axis=0)
    names = ["bijection", "j_position", "i_order", "rank_matching"]
    return MonitorSummary("AB", n, runs, steps, {k: int(v) for k, v in zip(names, tot)})


def monitor_12(n: int, m: int, runs: int, steps: int, seed: int = 0, workers: int = 1, log: bool = False) -> MonitorSummary:
    """Random deck 1/2 runs counting sandwich, ``p1 <= p2 <= p3`` and ``V1 <= V3`` failures."""
    if not 1 <= m <= n - 1 or n < 3:
        raise ValueError("need n >= 3 and 1 <= m <= n - 1")
    logs = []

    def fn(rng, lo, cnt):
        out = np.zeros((cnt, 6), dtype=np.int64)
        lg = np.zeros((steps + 1 if (log and lo == 0) else 0, 4), dtype=np.int64)
        _12_batch(n, m, cnt, steps, rng, out, lg)
        if lg.shape[0]:
            logs.append(lg)
        return out

    res = map_chunks(fn, runs, seed, f"coupling-12:{n}:{m}:{steps}", workers)
    tot = res[:, :3].sum(axis=0)
    names = ["sandwich", "p_order", "V1_le_V3"]
    return MonitorSummary("12", n, runs, steps, {k: int(v) for k, v in zip(names, tot)}, res[:, 3:],
                          logs[0] if logs else None)


def write_monitor_csv(path: str | Path, log: np.ndarray, header_lines: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["step", "I", "J", "M", "violation_flag"])
        for s, row in enumerate(log):
            w.writerow([s, *(int(x) for x in row)])


# --- tail domination ----------------------------------------------------------------------


@dataclass
class TailDomination:
    n: int
    m: int
    t: int
    r: int
    delta: float
    center: int
    lhs: float
    rhs_first: float
    rhs_second: float
    se: float
    exact: bool
    pathwise_failures: int
    passed: bool

    @property
    def rhs(self) -> float:
        return self.rhs_first + self.rhs_second


def _window(center: float, radius: float, size: int) -> tuple[int, int]:
    return max(1, math.ceil(center - radius)), min(size, math.floor(center + radius))


def tail_domination_check(
    n: int,
    m: int,
    t: int,
    r: int,
    delta: float,
    reps: int = 10_000,
    seed: int = 0,
    center: int | None = None,
    exact: bool | None = None,
    z: float = 3.0,
    workers: int = 1,
) -> TailDomination:
    """Compare ``P(J_t in center +- delta)`` with the sum of two (n-1)-deck probabilities.

    Deck 1 starts with ``i`` on top and ``j`` at ``m+1``.  The right side is
    ``P(Pi_t(1) > r | 1 survives) + P(Pi_t(m) in center +- (delta + r) | m survives)``
    on ``n - 1`` cards.  ``center`` defaults to ``m + 1``.  Small cases are
    computed exactly by enumeration unless ``exact=False``.
    """
    c = m + 1 if center is None else center
    lo, hi = _window(c, delta, n)
    lo2, hi2 = _window(c, delta + r, n - 1)
    use_exact = exact if exact is not None else (n <= 7 and t <= 4 and n - 1 <= 6)
    if use_exact:
        pair = exact_pair_law_from_positions(n, 1, m + 1, t)
        lhs = float(pair.probs[:, lo - 1 : hi].sum()) if lo <= hi else 0.0
        first = float(exact_conditional_position(n - 1, 1, t, max_n=n - 1, max_t=max(t, 1))[r:].sum())
        law_m = exact_conditional_position(n - 1, m, t, max_n=n - 1, max_t=max(t, 1))
        second = float(law_m[lo2 - 1 : hi2].sum()) if lo2 <= hi2 else 0.0
        return TailDomination(n, m, t, r, delta, c, lhs, first, second, 0.0, True, 0, lhs <= first + second + 1e-12)
    mon = monitor_12(n, m, reps, t, seed, workers)
    I, J, M = mon.finals[:, 0], mon.finals[:, 1], mon.finals[:, 2]
    inside = (J >= lo) & (J <= hi)
    lhs = float(inside.mean())
    # on the coupling, J in the window forces I > r or M in the widened window
    implied = (I > r) | ((M >= lo2) & (M <= hi2))
    failures = int((inside & ~implied).sum())
    first_s = sample_conditioned(n - 1, 1, t, reps, seed, workers=workers)[:, 0]
    second_s = sample_conditioned(n - 1, m, t, reps, seed, workers=workers)[:, 0]
    first = float((first_s > r).mean())
    second = float(((second_s >= lo2) & (second_s <= hi2)).mean())
    se = math.sqrt(sum(p * (1 - p) for p in (lhs, first, second)) / reps)
    return TailDomination(n, m, t, r, delta, c, lhs, first, second, se, False, failures,
                          lhs <= first + second + z * se and failures == 0)
