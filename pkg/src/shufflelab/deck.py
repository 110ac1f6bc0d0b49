"""Deck model and random-to-random insertion shuffles.

A deck of ``n`` cards is identified with the permutation ``sigma`` mapping a
card number to its position; both are 1-indexed.  One shuffle step removes
the card at a uniform position ``i`` and reinserts it so that it lands at a
uniform position ``j`` of the reconstituted deck (the two draws are
independent), which yields the increment law

    id                      w.p. 1/n
    adjacent transposition  w.p. 2/n^2
    any other cycle c_{i,j} w.p. 1/n^2
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import _seq
from ._parallel import map_chunks
from .rng import replica_rng

__all__ = [
    "Deck",
    "Move",
    "SurvivorSet",
    "Trajectory",
    "ResourceLimitError",
    "apply_move",
    "shuffle_step",
    "simulate",
    "simulate_trajectory",
    "replay",
    "draw_move",
    "sample_decks",
]

# ~2 GB of int32 state is where simulate() refuses
MAX_DECK_SIZE = 100_000_000
MAX_TRAJECTORY_ROWS = 250_000_000


class ResourceLimitError(RuntimeError):
    """Raised before starting work that would exceed a configured limit."""


class Deck:
    """An ordered deck stored as ``sigma`` (card -> position) and its inverse.

    Both arrays are 1-indexed numpy arrays with an unused slot 0.
    """

    __slots__ = ("n", "_sigma", "_order")

    def __init__(self, sigma: Iterable[int]):
        sig = np.asarray(list(sigma) if not isinstance(sigma, np.ndarray) else sigma, dtype=np.int64)
        n = sig.shape[0]
        if n < 1:
            raise ValueError("a deck needs at least one card")
        if sorted(sig.tolist()) != list(range(1, n + 1)):
            raise ValueError("sigma must be a bijection of [n] onto itself")
        self.n = n
        self._sigma = np.concatenate(([0], sig))
        self._order = np.zeros(n + 1, dtype=np.int64)
        self._order[self._sigma[1:]] = np.arange(1, n + 1)

    @classmethod
    def identity(cls, n: int) -> Deck:
        return cls(np.arange(1, n + 1))

    @classmethod
    def from_order(cls, order: Iterable[int]) -> Deck:
        """Build from the top-to-bottom card list (``order[p-1]`` is the card at ``p``)."""
        cards = np.asarray(list(order), dtype=np.int64)
        n = cards.shape[0]
        if sorted(cards.tolist()) != list(range(1, n + 1)):
            raise ValueError("order must list every card 1..n exactly once")
        sigma = np.zeros(n, dtype=np.int64)
        sigma[cards - 1] = np.arange(1, n + 1)
        return cls(sigma)

    @property
    def sigma(self) -> np.ndarray:
        """``sigma[c-1]`` is the position of card ``c``."""
        return self._sigma[1:].copy()

    @property
    def order(self) -> np.ndarray:
        """``order[p-1]`` is the card at position ``p``."""
        return self._order[1:].copy()

    def position_of(self, card: int) -> int:
        if not 1 <= card <= self.n:
            raise ValueError(f"card {card} outside [1, {self.n}]")
        return int(self._sigma[card])

    def card_at(self, position: int) -> int:
        if not 1 <= position <= self.n:
            raise ValueError(f"position {position} outside [1, {self.n}]")
        return int(self._order[position])

    def check(self) -> None:
        """Full-scan consistency check of the two lookup tables."""
        pos = self._sigma[1:]
        if not np.array_equal(np.sort(pos), np.arange(1, self.n + 1)):
            raise AssertionError("sigma is not a bijection")
        if not np.array_equal(self._order[pos], np.arange(1, self.n + 1)):
            raise AssertionError("card_at(position_of(c)) != c")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Deck) and np.array_equal(self._sigma, other._sigma)

    def __hash__(self) -> int:
        return hash(self._sigma.tobytes())

    def __repr__(self) -> str:
        if self.n <= 12:
            return f"Deck(sigma={self._sigma[1:].tolist()})"
        return f"Deck(n={self.n})"


@dataclass(frozen=True)
class Move:
    """Remove the card at position ``i`` and reinsert it at position ``j``."""

    i: int
    j: int

    def validate(self, n: int) -> None:
        if not (1 <= self.i <= n and 1 <= self.j <= n):
            raise ValueError(f"move ({self.i}, {self.j}) outside [1, {n}]")


@dataclass
class SurvivorSet:
    """Cards never chosen for removal during the first ``t`` steps."""

    n: int
    t: int = 0
    mask: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.mask is None:
            self.mask = np.ones(self.n + 1, dtype=bool)
            self.mask[0] = False
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != (self.n + 1,):
                raise ValueError("mask must have length n + 1 (slot 0 unused)")
            self.mask[0] = False

    @classmethod
    def full(cls, n: int) -> SurvivorSet:
        return cls(n)

    @property
    def members(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.mask).tolist())

    def __contains__(self, card: int) -> bool:
        return bool(0 < card <= self.n and self.mask[card])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def discard(self, card: int) -> SurvivorSet:
        mask = self.mask.copy()
        mask[card] = False
        return SurvivorSet(self.n, self.t + 1, mask)


@dataclass
class Trajectory:
    """Log of ``(removed card c_t, insertion position d_t)`` per step."""

    n: int
    seed: int
    steps: np.ndarray  # shape (t, 2)

    def __len__(self) -> int:
        return int(self.steps.shape[0])

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for c, d in self.steps:
            yield int(c), int(d)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# n={self.n} seed={self.seed}\n")
            w = csv.writer(fh)
            w.writerow(["step", "c_t", "d_t"])
            for s, (c, d) in enumerate(self.steps, start=1):
                w.writerow([s, int(c), int(d)])

    @classmethod
    def from_csv(cls, path: str | Path) -> Trajectory:
        meta: dict[str, int] = {}
        rows = []
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    for tok in line[1:].split():
                        key, _, val = tok.partition("=")
                        meta[key] = int(val)
                    continue
                if line.startswith("step"):
                    continue
                s, c, d = (int(x) for x in line.strip().split(","))
                rows.append((c, d))
        steps = np.asarray(rows, dtype=np.int64).reshape(-1, 2)
        return cls(meta["n"], meta.get("seed", 0), steps)


def _moved_positions(pos: np.ndarray, i: int, j: int) -> np.ndarray:
    """New positions of the cards at ``pos`` after moving position ``i`` to ``j``."""
    out = pos.copy()
    if i < j:
        out[(pos > i) & (pos <= j)] -= 1
    elif j < i:
        out[(pos >= j) & (pos < i)] += 1
    out[pos == i] = j
    return out


def apply_move(deck: Deck, move: Move | tuple[int, int]) -> Deck:
    """Return the deck after removing the card at ``i`` and reinserting it at ``j``."""
    if not isinstance(move, Move):
        move = Move(*move)
    move.validate(deck.n)
    if move.i == move.j:
        return deck
    return Deck(_moved_positions(deck.sigma, move.i, move.j))


def draw_move(rng: np.random.Generator, n: int) -> Move:
    """Draw removal and insertion positions, matching the compiled kernels' convention."""
    i = int(rng.random() * n) + 1
    j = int(rng.random() * n) + 1
    return Move(i, j)


def shuffle_step(
    deck: Deck, survivors: SurvivorSet, rng: np.random.Generator
) -> tuple[Deck, SurvivorSet]:
    """One random-to-random step; the removed card leaves the survivor set."""
    move = draw_move(rng, deck.n)
    card = deck.card_at(move.i)
    return apply_move(deck, move), survivors.discard(card)


def _check_limits(n: int, t: int, record: bool = False) -> None:
    if n < 1:
        raise ValueError("n must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    if n > MAX_DECK_SIZE:
        raise ResourceLimitError(f"n={n} exceeds MAX_DECK_SIZE={MAX_DECK_SIZE}")
    if record and t > MAX_TRAJECTORY_ROWS:
        raise ResourceLimitError(f"t={t} exceeds MAX_TRAJECTORY_ROWS={MAX_TRAJECTORY_ROWS}")


def _run(n: int, t: int, rng: np.random.Generator, record: bool):
    flat, sizes, fen, card_block = _seq.seq_identity(n, False)
    survivor = np.ones(n + 1, dtype=np.bool_)
    traj = np.zeros((t if record else 0, 2), dtype=np.int64)
    _seq.run_shuffle(flat, sizes, fen, card_block, survivor, t, rng, traj)
    order = _seq.seq_order(flat, sizes)
    survivor[0] = False
    return Deck.from_order(order), SurvivorSet(n, t, survivor), traj


def simulate(
    n: int, t: int, seed: int = 0, replica: int = 0, rng: np.random.Generator | None = None
) -> tuple[Deck, SurvivorSet]:
    """Shuffle the identity deck ``t`` times; deterministic in ``(n, t, seed, replica)``.

    Each step costs O(log n) on the blocked order-statistic sequence.  The
    result equals iterating :func:`shuffle_step` on the same generator.
    """
    _check_limits(n, t)
    if rng is None:
        rng = replica_rng(seed, "shuffle", replica)
    deck, surv, _ = _run(n, t, rng, record=False)
    return deck, surv


def simulate_trajectory(
    n: int, t: int, seed: int = 0, replica: int = 0
) -> tuple[Deck, SurvivorSet, Trajectory]:
    """As :func:`simulate`, also returning the ``(c_t, d_t)`` log."""
    _check_limits(n, t, record=True)
    rng = replica_rng(seed, "shuffle", replica)
    deck, surv, traj = _run(n, t, rng, record=True)
    return deck, surv, Trajectory(n, seed, traj)


def replay(traj: Trajectory, start: Deck | None = None) -> tuple[Deck, SurvivorSet]:
    """Rebuild the deck and survivor set from a trajectory log."""
    deck = Deck.identity(traj.n) if start is None else start
    state = _seq.seq_from_order(deck.order.astype(np.int32), True)
    survivor = np.ones(traj.n + 1, dtype=bool)
    for c, d in traj:
        pos = _seq.seq_position_of(*state, c)
        _seq.seq_move(*state, traj.n, pos, d)
        survivor[c] = False
    survivor[0] = False
    return Deck.from_order(_seq.seq_order(state[0], state[1])), SurvivorSet(traj.n, len(traj), survivor)


def sample_decks(n: int, t: int, reps: int, seed: int = 0, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """``reps`` independent shuffles of the identity deck.

    Returns ``(sigmas, survivors)``, both of shape ``(reps, n)``: row ``r`` holds
    ``sigma(1..n)`` and the survivor indicator of cards ``1..n``.
    """
    _check_limits(n, t)

    def fn(rng, lo, cnt):
        out = np.zeros((cnt, 2, n), dtype=np.int64)
        sig = np.zeros((cnt, n), dtype=np.int64)
        surv = np.zeros((cnt, n), dtype=np.bool_)
        _seq.deck_batch(n, t, rng, cnt, sig, surv)
        out[:, 0] = sig
        out[:, 1] = surv
        return out

    res = map_chunks(fn, reps, seed, f"decks:{n}:{t}", workers)
    return res[:, 0], res[:, 1].astype(bool)
