"""Numba kernels for an order-statistic card sequence.

The deck is stored as a blocked list: ``flat[b*CAP : b*CAP + sizes[b]]``
holds the cards of block ``b`` in deck order, a Fenwick tree over ``sizes`` turns a
position into ``(block, offset)`` in O(log n), and ``card_block`` maps a card
to its block.  Blocks hold at most ``CAP`` cards; when one fills up the whole
sequence is redistributed evenly.  Under uniform moves block sizes drift
like random walks, so a rebuild is needed only every ~n/log n moves on
average and the amortised cost per move stays O(log n).

A sequence state is the tuple ``(flat, sizes, fen, card_block)``.  Cards and
positions are 1-indexed.
"""

import numpy as np
from numba import njit

BLOCK = 32
CAP = 3 * BLOCK


@njit(cache=True, nogil=True)
def _fen_add(fen, b, delta):
    i = b + 1
    nb = fen.shape[0] - 1
    while i <= nb:
        fen[i] += delta
        i += i & (-i)


@njit(cache=True, nogil=True)
def _fen_prefix(fen, b):
    # number of cards in blocks 0..b-1
    s = 0
    i = b
    while i > 0:
        s += fen[i]
        i -= i & (-i)
    return s


@njit(cache=True, nogil=True)
def _fen_build(fen, sizes):
    nb = sizes.shape[0]
    fen[:] = 0
    for b in range(nb):
        i = b + 1
        fen[i] += sizes[b]
        j = i + (i & (-i))
        if j <= nb:
            fen[j] += fen[i]
    # fen[0] is unused by the tree; cache the top search step there
    step = 1
    while step * 2 <= nb:
        step *= 2
    fen[0] = step


@njit(cache=True, nogil=True)
def _locate(fen, pos):
    """Block and 0-based offset of the card at 1-based ``pos``."""
    nb = fen.shape[0] - 1
    step = fen[0]
    idx = 0
    rem = pos
    while step > 0:
        nxt = idx + step
        if nxt <= nb and fen[nxt] < rem:
            idx = nxt
            rem -= fen[nxt]
        step >>= 1
    return idx, rem - 1


@njit(cache=True, nogil=True)
def _fill(flat, sizes, fen, card_block, order):
    n = order.shape[0]
    nb = sizes.shape[0]
    track = card_block.shape[0] > 0
    base = n // nb
    extra = n % nb
    k = 0
    for b in range(nb):
        sz = base + (1 if b < extra else 0)
        for o in range(sz):
            c = order[k]
            flat[b * CAP + o] = c
            if track:
                card_block[c] = b
            k += 1
        sizes[b] = sz
    _fen_build(fen, sizes)


@njit(cache=True, nogil=True)
def seq_from_order(order, track=True):
    """Build a sequence state from ``order[p-1] = card at position p``.

    With ``track=False`` the card -> block index is not maintained (an empty
    ``card_block``); ``seq_position_of`` is then unavailable but moves are
    noticeably cheaper.
    """
    n = order.shape[0]
    nb = max(1, (n + BLOCK - 1) // BLOCK)
    flat = np.zeros(nb * CAP, dtype=np.int32)
    sizes = np.zeros(nb, dtype=np.int32)
    fen = np.zeros(nb + 1, dtype=np.int32)
    card_block = np.zeros(n + 1 if track else 0, dtype=np.int32)
    _fill(flat, sizes, fen, card_block, order)
    return flat, sizes, fen, card_block


@njit(cache=True, nogil=True)
def seq_identity(n, track=True):
    order = np.arange(1, n + 1).astype(np.int32)
    return seq_from_order(order, track)


@njit(cache=True, nogil=True)
def seq_order(flat, sizes):
    total = 0
    for b in range(sizes.shape[0]):
        total += sizes[b]
    out = np.empty(total, dtype=np.int32)
    k = 0
    for b in range(sizes.shape[0]):
        base = b * CAP
        for o in range(sizes[b]):
            out[k] = flat[base + o]
            k += 1
    return out


@njit(cache=True, nogil=True)
def seq_sigma(flat, sizes, n):
    """``sigma[c] = position of card c`` (index 0 unused)."""
    sigma = np.zeros(n + 1, dtype=np.int32)
    p = 1
    for b in range(sizes.shape[0]):
        base = b * CAP
        for o in range(sizes[b]):
            sigma[flat[base + o]] = p
            p += 1
    return sigma


@njit(cache=True, nogil=True)
def seq_rebalance(flat, sizes, fen, card_block):
    order = seq_order(flat, sizes)
    _fill(flat, sizes, fen, card_block, order)


@njit(cache=True, nogil=True)
def seq_position_of(flat, sizes, fen, card_block, card):
    b = card_block[card]
    base = b * CAP
    for o in range(sizes[b]):
        if flat[base + o] == card:
            return _fen_prefix(fen, b) + o + 1
    return -1


@njit(cache=True, nogil=True)
def seq_card_at(flat, sizes, fen, pos):
    b, off = _locate(fen, pos)
    return flat[b * CAP + off]


@njit(cache=True, nogil=True)
def seq_remove_at(flat, sizes, fen, pos):
    b, off = _locate(fen, pos)
    base = b * CAP
    sz = sizes[b]
    card = flat[base + off]
    for o in range(base + off, base + sz - 1):
        flat[o] = flat[o + 1]
    sizes[b] = sz - 1
    _fen_add(fen, b, -1)
    return card


@njit(cache=True, nogil=True)
def seq_insert_at(flat, sizes, fen, card_block, pos, card, length):
    """Insert ``card`` at 1-based ``pos`` into a sequence of ``length`` cards.

    Returns True when the receiving block is full; the caller must then
    ``seq_rebalance`` before the next insertion.
    """
    if length == 0:
        b, off = 0, 0
    elif pos > length:
        b, off = _locate(fen, length)
        off += 1
    else:
        b, off = _locate(fen, pos)
    base = b * CAP
    sz = sizes[b]
    for o in range(base + sz, base + off, -1):
        flat[o] = flat[o - 1]
    flat[base + off] = card
    sizes[b] = sz + 1
    if card_block.shape[0] > 0:
        card_block[card] = b
    _fen_add(fen, b, 1)
    # keep a free slot in every block for the next insertion
    return sz + 1 >= CAP


@njit(cache=True, nogil=True)
def seq_move(flat, sizes, fen, card_block, n, i, j):
    """Remove the card at position ``i`` of an ``n``-card deck and reinsert it at ``j``."""
    card = seq_remove_at(flat, sizes, fen, i)
    if seq_insert_at(flat, sizes, fen, card_block, j, card, n - 1):
        seq_rebalance(flat, sizes, fen, card_block)
    return card


@njit(cache=True, nogil=True)
def draw_move(rng, n):
    # two independent uniforms on [n]; the float draw keeps the kernel fast
    i = int(rng.random() * n) + 1
    j = int(rng.random() * n) + 1
    return i, j


@njit(cache=True, nogil=True)
def run_shuffle(flat, sizes, fen, card_block, survivor, t, rng, traj):
    """Advance ``t`` random-to-random steps in place.

    ``survivor[c]`` is cleared when card ``c`` is removed.  When ``traj`` has
    ``t`` rows, step ``s`` is logged as ``(c_s, d_s)``.
    """
    n = survivor.shape[0] - 1
    record = traj.shape[0] >= t
    for s in range(t):
        i, j = draw_move(rng, n)
        card = seq_move(flat, sizes, fen, card_block, n, i, j)
        survivor[card] = False
        if record:
            traj[s, 0] = card
            traj[s, 1] = j


@njit(cache=True, nogil=True)
def band_counts_from_sigma(sigma, survivor, lo, hi, radius):
    total = 0
    surv = 0
    for c in range(lo, hi + 1):
        d = sigma[c] - c
        if d < 0:
            d = -d
        if d <= radius:
            total += 1
            if survivor[c]:
                surv += 1
    return total, surv


@njit(cache=True, nogil=True)
def shuffle_band_snapshots(n, times, rng, lo, hi, radius):
    """Run one replica from the identity and record band counts at ``times``.

    ``times`` must be non-decreasing.  Row ``k`` of the result is
    ``(|Delta|, |Delta & A^t|, |D & A^t|)`` at ``t = times[k]`` where Delta
    collects cards ``c`` in ``lo..hi`` with ``|sigma(c) - c| <= radius``.
    """
    flat, sizes, fen, card_block = seq_identity(n, False)
    survivor = np.ones(n + 1, dtype=np.bool_)
    out = np.zeros((times.shape[0], 3), dtype=np.int64)
    done = 0
    for k in range(times.shape[0]):
        target = times[k]
        for _ in range(done, target):
            i, j = draw_move(rng, n)
            card = seq_move(flat, sizes, fen, card_block, n, i, j)
            survivor[card] = False
        done = max(done, target)
        sigma = seq_sigma(flat, sizes, n)
        total, surv = band_counts_from_sigma(sigma, survivor, lo, hi, radius)
        alive = 0
        for c in range(lo, hi + 1):
            if survivor[c]:
                alive += 1
        out[k, 0] = total
        out[k, 1] = surv
        out[k, 2] = alive
    return out


@njit(cache=True, nogil=True)
def deck_batch(n, t, rng, count, sigmas, survivors):
    """``count`` independent runs of ``t`` steps from the identity, one stream."""
    for r in range(count):
        flat, sizes, fen, card_block = seq_identity(n, False)
        survivor = np.ones(n + 1, dtype=np.bool_)
        for _ in range(t):
            i, j = draw_move(rng, n)
            card = seq_move(flat, sizes, fen, card_block, n, i, j)
            survivor[card] = False
        sig = seq_sigma(flat, sizes, n)
        for c in range(1, n + 1):
            sigmas[r, c - 1] = sig[c]
            survivors[r, c - 1] = survivor[c]
