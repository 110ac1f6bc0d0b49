"""Position chain of a card that is never removed, and its relatives.

Given that card ``j`` is not chosen for removal, its position moves by
``-1, 0, +1`` with probabilities

    p-(i) = (i-1)(n-i+1) / (n(n-1))
    p+(i) = i(n-i) / (n(n-1))
    p0(i) = ((i-1)^2 + (n-i)^2) / (n(n-1))

at position ``i``.  The truncated chain ``zeta`` uses this law inside the
window ``[n] & [j-M, j+M]`` and the law at ``j`` everywhere else on Z.  The
(S, X, Y) chain splits ``zeta - j`` into a homogeneous lazy walk ``S``, a
correction ``X`` for the spatial variation of the jump rate and a correction
``Y`` for the drift.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from numba import njit
from scipy import stats

from ._parallel import map_chunks
from .rng import replica_rng

__all__ = [
    "BERRY_ESSEEN_C",
    "conditional_probs",
    "ConditionalKernel",
    "TruncatedChain",
    "DecomposedState",
    "DominatingWalks",
    "normal_tail",
    "simulate_zeta",
    "simulate_sxy",
    "zeta_law",
    "zeta_path_law",
    "sxy_transitions",
    "sxy_law",
    "x_increment_balance",
    "BoundReport",
    "bound_evaluators",
    "default_truncation",
    "sample_conditioned",
    "sample_by_rejection",
    "KernelCheck",
    "kernel_check",
    "InequalityCheck",
    "levy_domination_check",
    "write_path_csv",
]

BERRY_ESSEEN_C = 0.4748


def conditional_probs(n: int, i: int, exact: bool = False):
    """``(p-, p0, p+)`` at position ``i`` of an ``n``-card deck.

    With ``exact=True`` the three values are ``Fraction`` objects.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not 1 <= i <= n:
        raise ValueError(f"state {i} outside [1, {n}]")
    den = n * (n - 1)
    num_m = (i - 1) * (n - i + 1)
    num_p = i * (n - i)
    num_0 = (i - 1) ** 2 + (n - i) ** 2
    if exact:
        return Fraction(num_m, den), Fraction(num_0, den), Fraction(num_p, den)
    return num_m / den, num_0 / den, num_p / den


def normal_tail(x: float) -> float:
    """``Psi(x) = P(N(0,1) >= x)``."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


class ConditionalKernel:
    """Three-point transition law of the surviving card's position."""

    def __init__(self, n: int, j: int):
        if not 1 <= j <= n:
            raise ValueError("j outside [1, n]")
        self.n = n
        self.j = j

    def probs(self, i: int, exact: bool = False):
        return conditional_probs(self.n, i, exact)

    def matrix(self) -> np.ndarray:
        """``n x n`` transition matrix, ``P[i-1, k-1]``."""
        n = self.n
        P = np.zeros((n, n))
        for i in range(1, n + 1):
            pm, p0, pp = self.probs(i)
            P[i - 1, i - 1] = p0
            if i > 1:
                P[i - 1, i - 2] = pm
            if i < n:
                P[i - 1, i] = pp
        return P

    def law(self, t: int) -> np.ndarray:
        """Law of the position after ``t`` steps from ``j`` (entry ``i-1``)."""
        v = np.zeros(self.n)
        v[self.j - 1] = 1.0
        P = self.matrix()
        for _ in range(t):
            v = v @ P
        return v


class TruncatedChain:
    """The chain ``zeta^{n,j,M}`` on Z."""

    def __init__(self, n: int, j: int, M: int, state: int | None = None):
        if M <= 0:
            raise ValueError("M must be positive")
        if not 1 <= j <= n:
            raise ValueError("j outside [1, n]")
        self.n, self.j, self.M = n, j, M
        self.state = j if state is None else state

    def in_window(self, k: int) -> bool:
        return 1 <= k <= self.n and abs(k - self.j) <= self.M

    def probs(self, k: int, exact: bool = False):
        return conditional_probs(self.n, k if self.in_window(k) else self.j, exact)

    def step(self, rng: np.random.Generator) -> int:
        pm, _, pp = self.probs(self.state)
        u = rng.random()
        if u < pp:
            self.state += 1
        elif u < pp + pm:
            self.state -= 1
        return self.state


@dataclass(frozen=True)
class DecomposedState:
    S: int = 0
    X: int = 0
    Y: int = 0

    @property
    def offset(self) -> int:
        return self.S + self.X + self.Y


@dataclass(frozen=True)
class DominatingWalks:
    """Rates of the comparison processes for X (walk W) and Y (counter N)."""

    n: int
    M: int

    @property
    def nu(self) -> float:
        return self.M / (self.n - 1)

    def w_max_tail(self, t: int, delta: float) -> float:
        """Exact ``P(max_{m<=t} |W_m| >= delta)`` by dynamic programming."""
        return _walk_max_tail(self.nu, t, delta)

    def w_final_tail(self, t: int, delta: float) -> float:
        """Exact ``P(W_t >= delta)``."""
        return _walk_final_tail(self.nu, t, delta)

    def n_tail(self, t: int, delta: float) -> float:
        """``P(N_t >= delta)`` with ``N_t ~ Bin(t, 1/n)``."""
        k = math.ceil(delta)
        return float(stats.binom.sf(k - 1, t, 1.0 / self.n))


def _walk_max_tail(nu: float, t: int, delta: float) -> float:
    k = math.ceil(delta)
    if k <= 0:
        return 1.0
    # mass on (-k, k) that has not yet touched +-k
    v = np.zeros(2 * k - 1)
    v[k - 1] = 1.0
    for _ in range(t):
        nxt = (1 - 2 * nu) * v
        nxt[1:] += nu * v[:-1]
        nxt[:-1] += nu * v[1:]
        v = nxt
    return float(1.0 - v.sum())


def _walk_final_tail(nu: float, t: int, delta: float) -> float:
    k = math.ceil(delta)
    v = np.zeros(2 * t + 1)
    v[t] = 1.0
    for _ in range(t):
        nxt = (1 - 2 * nu) * v
        nxt[1:] += nu * v[:-1]
        nxt[:-1] += nu * v[1:]
        v = nxt
    idx = t + k
    return float(v[max(idx, 0):].sum()) if idx <= 2 * t else 0.0


# --- compiled samplers --------------------------------------------------------


def _tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    i = np.arange(n + 2, dtype=np.float64)
    den = n * (n - 1.0)
    pp = i * (n - i) / den
    pm = (i - 1) * (n - i + 1) / den
    return pp, pm


@njit(cache=True, nogil=True)
def _zeta_pm(pp, pm, n, j, M, k):
    if k >= 1 and k <= n and abs(k - j) <= M:
        return pp[k], pm[k]
    return pp[j], pm[j]


@njit(cache=True, nogil=True)
def _zeta_batch(pp, pm, n, j, M, t, rng, count, out):
    # out[r] = (final state, max |state - j|)
    for r in range(count):
        k = j
        md = 0
        for _ in range(t):
            a, b = _zeta_pm(pp, pm, n, j, M, k)
            u = rng.random()
            if u < a:
                k += 1
            elif u < a + b:
                k -= 1
            d = abs(k - j)
            if d > md:
                md = d
        out[r, 0] = k
        out[r, 1] = md


@njit(cache=True, nogil=True)
def _zeta_path(pp, pm, n, j, M, t, rng, path):
    k = j
    path[0] = k
    for m in range(t):
        a, b = _zeta_pm(pp, pm, n, j, M, k)
        u = rng.random()
        if u < a:
            k += 1
        elif u < a + b:
            k -= 1
        path[m + 1] = k


@njit(cache=True, nogil=True)
def _sxy_step(pp, pm, n, j, M, s, x, y, u):
    """One (S, X, Y) transition driven by the uniform ``u``.

    Cases in order: S+1, S-1, (S+(1+z)/2, X-1), (S-(1+z)/2, X+1), Y+w, stay.
    """
    k = j + s + x + y
    a_k, b_k = _zeta_pm(pp, pm, n, j, M, k)
    q_k = min(a_k, b_k)
    r_k = max(a_k, b_k)
    w = 1 if a_k >= b_k else -1
    a_j, b_j = pp[j], pm[j]
    q_j = min(a_j, b_j)
    z = 1 if q_j - q_k >= 0 else -1
    lo = min(q_k, q_j)
    gap = abs(q_j - q_k)
    e = r_k - q_k
    c = 1.0 - 2 * lo - 2 * gap - e
    if c < -1e-12:
        raise AssertionError("negative residual probability in the (S,X,Y) kernel")
    h = (1 + z) // 2
    if u < lo:
        return s + 1, x, y
    u -= lo
    if u < lo:
        return s - 1, x, y
    u -= lo
    if u < gap:
        return s + h, x - 1, y
    u -= gap
    if u < gap:
        return s - h, x + 1, y
    u -= gap
    if u < e:
        return s, x, y + w
    return s, x, y


@njit(cache=True, nogil=True)
def _sxy_path(pp, pm, n, j, M, t, rng, path):
    s = 0
    x = 0
    y = 0
    for m in range(t):
        s, x, y = _sxy_step(pp, pm, n, j, M, s, x, y, rng.random())
        path[m + 1, 0] = s
        path[m + 1, 1] = x
        path[m + 1, 2] = y


@njit(cache=True, nogil=True)
def _sxy_batch(pp, pm, n, j, M, t, nu, rng, count, out):
    """Columns: S_t, X_t, Y_t, max|S|, max|X|, max|Y|, #Y jumps, #X jumps, #X up, W_t, max|W|."""
    for r in range(count):
        s = 0
        x = 0
        y = 0
        w = 0
        ms = 0
        mx = 0
        my = 0
        mw = 0
        yj = 0
        xj = 0
        xu = 0
        for _ in range(t):
            s2, x2, y2 = _sxy_step(pp, pm, n, j, M, s, x, y, rng.random())
            if y2 != y:
                yj += 1
            if x2 != x:
                xj += 1
                if x2 > x:
                    xu += 1
            s, x, y = s2, x2, y2
            v = rng.random()
            if v < nu:
                w += 1
            elif v < 2 * nu:
                w -= 1
            if abs(s) > ms:
                ms = abs(s)
            if abs(x) > mx:
                mx = abs(x)
            if abs(y) > my:
                my = abs(y)
            if abs(w) > mw:
                mw = abs(w)
        out[r, 0] = s
        out[r, 1] = x
        out[r, 2] = y
        out[r, 3] = ms
        out[r, 4] = mx
        out[r, 5] = my
        out[r, 6] = yj
        out[r, 7] = xj
        out[r, 8] = xu
        out[r, 9] = w
        out[r, 10] = mw


@njit(cache=True, nogil=True)
def _moved(p, i, d):
    # new position of the card at p when the card at i != p moves to d
    if i < d and i < p <= d:
        return p - 1
    if d < i and d <= p < i:
        return p + 1
    return p


@njit(cache=True, nogil=True)
def _transition_counts(n, j, t, rng, count, counts):
    # the tracked card is never removed: removal is uniform over the other n-1 positions
    for _ in range(count):
        k = j
        for _ in range(t):
            r = int(rng.random() * (n - 1)) + 1
            if r >= k:
                r += 1
            d = int(rng.random() * n) + 1
            new = _moved(k, r, d)
            counts[k, new - k + 1] += 1
            k = new


@njit(cache=True, nogil=True)
def _rejection_batch(n, j, t, rng, count, out):
    # full deck started at the identity; out[r] = (accepted, final position of j)
    order = np.empty(n + 1, dtype=np.int64)
    for r in range(count):
        for p in range(1, n + 1):
            order[p] = p
        alive = 1
        for _ in range(t):
            i = int(rng.random() * n) + 1
            d = int(rng.random() * n) + 1
            c = order[i]
            if c == j:
                alive = 0
            if i < d:
                for p in range(i, d):
                    order[p] = order[p + 1]
            else:
                for p in range(i, d, -1):
                    order[p] = order[p - 1]
            order[d] = c
        pos = 0
        for p in range(1, n + 1):
            if order[p] == j:
                pos = p
        out[r, 0] = alive
        out[r, 1] = pos


# --- public simulation API ----------------------------------------------------


def simulate_zeta(n: int, j: int, M: int, t: int, seed: int = 0, replica: int = 0) -> np.ndarray:
    """One path ``(zeta_0, ..., zeta_t)`` of the truncated chain."""
    if M <= 0:
        raise ValueError("M must be positive")
    pp, pm = _tables(n)
    path = np.zeros(t + 1, dtype=np.int64)
    _zeta_path(pp, pm, n, j, M, t, replica_rng(seed, "zeta", replica), path)
    return path


def simulate_sxy(n: int, j: int, M: int, t: int, seed: int = 0, replica: int = 0) -> np.ndarray:
    """One path of ``(S, X, Y)``, shape ``(t+1, 3)``, starting at the origin."""
    if M <= 0:
        raise ValueError("M must be positive")
    pp, pm = _tables(n)
    path = np.zeros((t + 1, 3), dtype=np.int64)
    _sxy_path(pp, pm, n, j, M, t, replica_rng(seed, "sxy", replica), path)
    return path


def sample_conditioned(
    n: int, j: int, t: int, reps: int, seed: int = 0, M: int | None = None, workers: int = 1
) -> np.ndarray:
    """``reps`` draws of ``(final position, max |position - j|)`` of the chain.

    ``M=None`` samples the untruncated conditioned chain.
    """
    pp, pm = _tables(n)
    MM = n if M is None else M

    def fn(rng, lo, cnt):
        out = np.zeros((cnt, 2), dtype=np.int64)
        _zeta_batch(pp, pm, n, j, MM, t, rng, cnt, out)
        return out

    return map_chunks(fn, reps, seed, f"conditioned:{n}:{j}:{t}:{MM}", workers)


def sample_by_rejection(n: int, j: int, t: int, reps: int, seed: int = 0) -> np.ndarray:
    """Final positions of card ``j`` over full-deck runs in which ``j`` was never removed."""

    def fn(rng, lo, cnt):
        out = np.zeros((cnt, 2), dtype=np.int64)
        _rejection_batch(n, j, t, rng, cnt, out)
        return out

    res = map_chunks(fn, reps, seed, f"rejection:{n}:{j}:{t}")
    return res[res[:, 0] == 1, 1]


def write_path_csv(path: str | Path, values: np.ndarray, header_lines: list[str] | None = None) -> None:
    """``m,state`` for a 1-D path, ``m,S,X,Y`` for a 3-column one."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        if values.ndim == 1:
            w.writerow(["m", "state"])
            for m, v in enumerate(values):
                w.writerow([m, int(v)])
        else:
            w.writerow(["m", "S", "X", "Y"])
            for m, row in enumerate(values):
                w.writerow([m, *(int(v) for v in row)])


# --- exact laws ----------------------------------------------------------------


def _zeta_exact(n: int, j: int, M: int, k: int):
    inside = 1 <= k <= n and abs(k - j) <= M
    return conditional_probs(n, k if inside else j, exact=True)


def zeta_path_law(n: int, j: int, M: int, t: int) -> dict[tuple[int, ...], Fraction]:
    """Exact law of ``(zeta_0, ..., zeta_t)``."""
    law: dict = {(j,): Fraction(1)}
    for _ in range(t):
        nxt: dict = {}
        for path, p in law.items():
            pm, p0, pp = _zeta_exact(n, j, M, path[-1])
            for step, q in ((-1, pm), (0, p0), (1, pp)):
                if q:
                    key = path + (path[-1] + step,)
                    nxt[key] = nxt.get(key, 0) + p * q
        law = nxt
    return law


def zeta_law(n: int, j: int, M: int, t: int) -> dict[int, Fraction]:
    """Exact law of ``zeta_t``."""
    law: dict = {j: Fraction(1)}
    for _ in range(t):
        nxt: dict = {}
        for k, p in law.items():
            pm, p0, pp = _zeta_exact(n, j, M, k)
            for step, q in ((-1, pm), (0, p0), (1, pp)):
                if q:
                    nxt[k + step] = nxt.get(k + step, 0) + p * q
        law = nxt
    return law


def sxy_transitions(n: int, j: int, M: int, state: DecomposedState | tuple[int, int, int]):
    """The six ``((dS, dX, dY), probability)`` cases, exact, in sampling order."""
    s, x, y = (state.S, state.X, state.Y) if isinstance(state, DecomposedState) else state
    i = s + x + y
    pm_k, _, pp_k = _zeta_exact(n, j, M, j + i)
    pm_j, _, pp_j = _zeta_exact(n, j, M, j)
    q_k, r_k = min(pp_k, pm_k), max(pp_k, pm_k)
    q_j = min(pp_j, pm_j)
    w = 1 if pp_k >= pm_k else -1
    z = 1 if q_j - q_k >= 0 else -1
    h = (1 + z) // 2
    lo = min(q_k, q_j)
    gap = abs(q_j - q_k)
    cases = [
        ((1, 0, 0), lo),
        ((-1, 0, 0), lo),
        ((h, -1, 0), gap),
        ((-h, 1, 0), gap),
        ((0, 0, w), r_k - q_k),
    ]
    c = 1 - sum(p for _, p in cases)
    if c < 0:
        raise AssertionError("negative residual probability in the (S,X,Y) kernel")
    cases.append(((0, 0, 0), c))
    return cases


def sxy_law(n: int, j: int, M: int, t: int) -> dict[tuple[int, int, int], Fraction]:
    """Exact law of ``(S_t, X_t, Y_t)``."""
    law: dict = {(0, 0, 0): Fraction(1)}
    for _ in range(t):
        nxt: dict = {}
        for (s, x, y), p in law.items():
            for (ds, dx, dy), q in sxy_transitions(n, j, M, (s, x, y)):
                if q:
                    key = (s + ds, x + dx, y + dy)
                    nxt[key] = nxt.get(key, 0) + p * q
        law = nxt
    return law


def x_increment_balance(n: int, j: int, M: int, t: int) -> Fraction:
    """Largest ``|P(X up, history) - P(X down, history)|`` over X histories and steps.

    Zero means that, given the past of X, an X jump is equally likely to go
    up or down.
    """
    law: dict = {((0,), 0, 0): Fraction(1)}  # (X history, S, Y)
    worst = Fraction(0)
    for _ in range(t):
        nxt: dict = {}
        up: dict = {}
        down: dict = {}
        for (hist, s, y), p in law.items():
            x = hist[-1]
            for (ds, dx, dy), q in sxy_transitions(n, j, M, (s, x, y)):
                if not q:
                    continue
                if dx > 0:
                    up[hist] = up.get(hist, 0) + p * q
                elif dx < 0:
                    down[hist] = down.get(hist, 0) + p * q
                key = (hist + (x + dx,), s + ds, y + dy)
                nxt[key] = nxt.get(key, 0) + p * q
        for hist in set(up) | set(down):
            worst = max(worst, abs(up.get(hist, 0) - down.get(hist, 0)))
        law = nxt
    return worst


# --- bound evaluators -------------------------------------------------------------


def default_truncation(n: int, j: int, t: int) -> tuple[int, int]:
    """Default ``(M, delta)``: ``M = ceil(sqrt(t j / n) log n)``, ``delta = ceil(sqrt(t M / n) log n)``."""
    M = math.ceil(math.sqrt(t * j / n) * math.log(n))
    delta = math.ceil(math.sqrt(t * M / n) * math.log(n))
    return max(M, 1), max(delta, 1)


def _json_float(x: float):
    return x if math.isfinite(x) else None


@dataclass
class BoundReport:
    """Right-hand sides of the tail bounds for ``zeta_t - j`` and ``max |zeta - j|``.

    ``upper``/``lower`` bracket ``P(zeta_t - j >= u)`` and ``zetamax_total``
    bounds ``P(max_m |zeta_m - j| >= M)``.  A term whose precondition fails is
    infinite and flagged.
    """

    n: int
    j: int
    M: int
    t: int
    delta: float
    u: float
    C: float
    q_j: float
    psi_upper: float
    psi_lower: float
    berry_esseen: float
    w_term: float
    n_term: float
    upper: float
    lower: float
    zetamax_s_term: float
    zetamax_w_term: float
    zetamax_n_term: float
    zetamax_total: float
    n_term_vacuous: bool
    zetamax_vacuous: bool
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: (_json_float(v) if isinstance(v, float) else v) for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def bound_evaluators(
    n: int, j: int, M: int, t: int, delta: float, u: float = 0.0, C: float = BERRY_ESSEEN_C
) -> BoundReport:
    pm, _, pp = conditional_probs(n, j)
    q_j = min(pm, pp)
    flags = []
    scale = math.sqrt(2 * t * q_j) if t > 0 else 0.0
    if scale > 0:
        psi_up = normal_tail((u - delta) / scale)
        psi_lo = normal_tail((u + delta) / scale)
        be = C / scale
    else:
        psi_up = 1.0 if u - delta <= 0 else 0.0
        psi_lo = 1.0 if u + delta <= 0 else 0.0
        be = math.inf
        flags.append("t=0: Berry-Esseen term undefined")
    w_term = 32 * M * t / (delta**2 * (n - 1)) if delta > 0 else math.inf
    gap = delta / 2 - t / n
    n_vac = gap <= 0
    if n_vac:
        n_term = math.inf
        flags.append("delta/2 - t/n <= 0: N-term vacuous")
    else:
        n_term = (t / n) * ((n - 1) / n) / gap**2
    z_vac = M <= delta
    if z_vac:
        s_term = math.inf
        flags.append("M <= delta: S-term of the maximum bound vacuous")
    else:
        s_term = 8 * t * q_j / (M - delta) ** 2
    return BoundReport(
        n=n, j=j, M=M, t=t, delta=float(delta), u=float(u), C=C, q_j=q_j,
        psi_upper=psi_up, psi_lower=psi_lo, berry_esseen=be, w_term=w_term, n_term=n_term,
        upper=psi_up + be + w_term + n_term,
        lower=psi_lo - be - w_term - n_term,
        zetamax_s_term=s_term, zetamax_w_term=w_term, zetamax_n_term=n_term,
        zetamax_total=s_term + w_term + n_term,
        n_term_vacuous=n_vac, zetamax_vacuous=z_vac, flags=flags,
    )


# --- Monte Carlo checks ------------------------------------------------------------


@dataclass
class KernelCheck:
    n: int
    j: int
    t: int
    reps: int
    min_count: int
    counts: np.ndarray  # counts[i] = (#down, #stay, #up) from state i
    buckets: list[int]
    max_deviation: float

    def empirical(self, i: int) -> np.ndarray:
        row = self.counts[i]
        return row / row.sum()


def kernel_check(
    n: int, j: int, t: int, reps: int, seed: int = 0, min_count: int = 100_000, workers: int = 1
) -> KernelCheck:
    """Compare conditioned transition frequencies with the closed-form kernel.

    Moves are drawn as full-deck moves that avoid removing the tracked card,
    which is exactly the law given survival.  States visited at least
    ``min_count`` times are compared.
    """

    def fn(rng, lo, cnt):
        counts = np.zeros((1, n + 1, 3), dtype=np.int64)
        _transition_counts(n, j, t, rng, cnt, counts[0])
        return counts

    counts = map_chunks(fn, reps, seed, f"kernel:{n}:{j}:{t}", workers).sum(axis=0)
    buckets = [i for i in range(1, n + 1) if counts[i].sum() >= min_count]
    dev = 0.0
    for i in buckets:
        emp = counts[i] / counts[i].sum()
        dev = max(dev, float(np.abs(emp - np.array(conditional_probs(n, i))).max()))
    return KernelCheck(n, j, t, reps, min_count, counts, buckets, dev)


@dataclass
class InequalityCheck:
    name: str
    delta: float
    lhs: float
    rhs: float
    slack: float
    passed: bool


def _se(p: float, reps: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / reps)


def levy_domination_check(
    n: int, j: int, M: int, t: int, deltas, reps: int, seed: int = 0, workers: int = 1, z: float = 3.0
) -> list[InequalityCheck]:
    """Monte Carlo check of the maximal and domination inequalities for S, X, Y and W."""
    pp, pm = _tables(n)
    nu = M / (n - 1)
    if nu > 0.5:
        raise ValueError("M/(n-1) must be at most 1/2")

    def fn(rng, lo, cnt):
        out = np.zeros((cnt, 11), dtype=np.int64)
        _sxy_batch(pp, pm, n, j, M, t, nu, rng, cnt, out)
        return out

    res = map_chunks(fn, reps, seed, f"sxy-batch:{n}:{j}:{M}:{t}", workers)
    walks = DominatingWalks(n, M)
    checks = []

    def add(name, delta, lhs, rhs, se):
        checks.append(InequalityCheck(name, float(delta), lhs, rhs, z * se, lhs <= rhs + z * se))

    for d in deltas:
        max_s = float((res[:, 3] >= d).mean())
        fin_s = float((res[:, 0] >= d).mean())
        max_x = float((res[:, 4] >= d).mean())
        max_y = float((res[:, 5] >= d).mean())
        max_w = float((res[:, 10] >= d).mean())
        fin_w = float((res[:, 9] >= d).mean())
        # one-sided slack from the SE of the difference of the two estimates
        add("levy_S", d, max_s, 4 * fin_s, math.hypot(_se(max_s, reps), 4 * _se(fin_s, reps)))
        add("levy_W", d, max_w, 4 * fin_w, math.hypot(_se(max_w, reps), 4 * _se(fin_w, reps)))
        add("dominate_X_by_W", d, max_x, max_w, math.hypot(_se(max_x, reps), _se(max_w, reps)))
        add("dominate_Y_by_N", d, max_y, walks.n_tail(t, d), _se(max_y, reps))
        add("levy_W_exact", d, walks.w_max_tail(t, d), 4 * walks.w_final_tail(t, d), 0.0)
    rate = res[:, 6] / t
    add("Y_jump_rate", 0, float(rate.mean()), 1.0 / n, float(rate.std(ddof=1) / math.sqrt(reps)))
    x_jumps = int(res[:, 7].sum())
    if x_jumps:
        up = float(res[:, 8].sum()) / x_jumps
        checks.append(InequalityCheck("X_jump_fairness", 0.0, abs(up - 0.5), 0.0,
                                      z * 0.5 / math.sqrt(x_jumps), abs(up - 0.5) <= z * 0.5 / math.sqrt(x_jumps)))
    return checks
