"""The band statistic, the schedule, and the CLT / delocalization experiments.

For a deck ``sigma`` the band statistic counts mid-deck cards that are still
close to where they started:

    Delta_alpha(sigma) = { j in D : |sigma(j) - j| <= alpha sqrt(n log n) }

with ``D = ceil(n(1-eps)/2) .. floor(n(1+eps)/2)``.  Logarithms are natural.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import _seq
from ._parallel import map_chunks
from .chains import normal_tail, sample_conditioned
from .deck import Deck, SurvivorSet
from .rng import replica_rng

__all__ = [
    "BandConfig",
    "DeltaCounts",
    "UniformMoments",
    "ScheduleParams",
    "FrequencyCheck",
    "delta_counts",
    "delta_counts_sigma",
    "uniform_delta_moments",
    "threshold_value",
    "threshold_event",
    "schedule",
    "schedule_at",
    "v_alpha",
    "analytic_reference",
    "lambda_n",
    "CLTResult",
    "clt_test",
    "DelocalizationResult",
    "delocalization_test",
    "sample_uniform_totals",
    "sample_shuffle_counts",
    "uniform_checks",
    "schedule_checks",
    "write_counts_csv",
]


@dataclass(frozen=True)
class BandConfig:
    n: int
    eps: float = 0.5
    alpha: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need n >= 2")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.lo > self.hi:
            raise ValueError("the band D is empty")

    @property
    def lo(self) -> int:
        return max(1, math.ceil(self.n * (1 - self.eps) / 2))

    @property
    def hi(self) -> int:
        return min(self.n, math.floor(self.n * (1 + self.eps) / 2))

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def nlogn(self) -> float:
        return self.n * math.log(self.n)

    @property
    def radius(self) -> float:
        return self.alpha * math.sqrt(self.nlogn)

    @property
    def radius_int(self) -> int:
        # |sigma(j) - j| is an integer, so comparing with floor(radius) is exact
        return math.floor(self.radius)


@dataclass(frozen=True)
class DeltaCounts:
    total: int
    survivors: int
    removed: int

    def __post_init__(self):
        if self.total != self.survivors + self.removed or min(self.survivors, self.removed) < 0:
            raise ValueError("inconsistent counts")


def delta_counts_sigma(sigma: np.ndarray, survivor_mask: np.ndarray | None, band: BandConfig) -> DeltaCounts:
    """Counts from a 0-indexed ``sigma`` array (``sigma[c-1]`` = position of c).

    ``survivor_mask`` has slot 0 unused, as in :class:`SurvivorSet`.
    """
    sigma = np.asarray(sigma)
    cards = np.arange(band.lo, band.hi + 1)
    close = np.abs(sigma[cards - 1] - cards) <= band.radius_int
    total = int(close.sum())
    surv = int((close & survivor_mask[cards]).sum()) if survivor_mask is not None else 0
    return DeltaCounts(total, surv, total - surv)


def delta_counts(deck: Deck, survivors: SurvivorSet, band: BandConfig) -> DeltaCounts:
    if deck.n != band.n or survivors.n != band.n:
        raise ValueError("deck size does not match the band")
    return delta_counts_sigma(deck.sigma, survivors.mask, band)


@dataclass(frozen=True)
class UniformMoments:
    mean: float
    variance_bound: float
    valid: bool
    warning: str = ""


def uniform_delta_moments(band: BandConfig) -> UniformMoments:
    """Mean of ``|Delta|`` under a uniform permutation and a bound on its variance.

    Each card of ``D`` lands within the radius with probability
    ``(1 + 2 floor(radius)) / n`` when no window is clipped by the deck edges.
    """
    n = band.n
    mean = band.size * (1 + 2 * band.radius_int) / n
    valid = n * (1 - band.eps) / 2 >= band.radius
    warn = "" if valid else "band window reaches the deck edge; the mean formula is not exact"
    return UniformMoments(mean, mean + mean**2 / (n - 1), valid, warn)


def threshold_value(band: BandConfig, k: float) -> float:
    e, a, L = band.eps, band.alpha, band.nlogn
    return 2 * e * a * math.sqrt(L) + k * math.sqrt(2 * e * a) * L**0.25


def threshold_event(counts: DeltaCounts | int, band: BandConfig, k: float) -> bool:
    """``|Delta| - 2 eps alpha sqrt(n log n) >= k sqrt(2 eps alpha) (n log n)^(1/4)``."""
    total = counts.total if isinstance(counts, DeltaCounts) else counts
    e, a, L = band.eps, band.alpha, band.nlogn
    return bool(total - 2 * e * a * math.sqrt(L) >= k * math.sqrt(2 * e * a) * L**0.25)


def v_alpha(alpha: float) -> float:
    return 1.0 - 4.0 * normal_tail(alpha * math.sqrt(8.0 / 3.0))


def analytic_reference(k: float, alpha: float) -> float:
    """``1 - 2/k^2 - 4(v(alpha)^-2 - 1)``, the limiting lower bound on the TV distance."""
    v = v_alpha(alpha)
    return 1.0 - 2.0 / k**2 - 4.0 * (v**-2 - 1.0)


@dataclass(frozen=True)
class ScheduleParams:
    n: int
    c_n: float | None
    t: int
    p: float
    n_p: float
    K: float
    v: float
    residual: float
    band: BandConfig


def schedule_at(n: int, t: int, eps: float = 0.5, alpha: float = 1.0, c_n: float | None = None) -> ScheduleParams:
    if t < 0:
        raise ValueError("t must be non-negative")
    band = BandConfig(n, eps, alpha)
    p = (1.0 - 1.0 / n) ** t
    n_p = n * p
    resid = abs(math.log(n_p / band.nlogn**0.25) - c_n) if c_n is not None else math.nan
    return ScheduleParams(n, c_n, t, p, n_p, band.size * p, v_alpha(alpha), resid, band)


def schedule(n: int, c_n: float, eps: float = 0.5, alpha: float = 1.0) -> ScheduleParams:
    """``t_n = floor(3/4 n log n - 1/4 n log log n - c_n n)`` and derived quantities."""
    if n < 3:
        raise ValueError("need n >= 3 for log log n")
    raw = 0.75 * n * math.log(n) - 0.25 * n * math.log(math.log(n)) - c_n * n
    # absorb rounding error when c_n is chosen to make raw exactly an integer
    t = math.floor(raw + 1e-9)
    if t < 0:
        raise ValueError(f"t_n = {raw:.3f} < 0: n={n} is too small for c_n={c_n}")
    return schedule_at(n, t, eps, alpha, c_n)


# --- sampling -----------------------------------------------------------------------


def sample_uniform_totals(band: BandConfig, reps: int, seed: int = 0, workers: int = 1) -> np.ndarray:
    """``|Delta|`` for ``reps`` uniform permutations."""
    n = band.n
    cards = np.arange(band.lo, band.hi + 1)

    def fn(rng, lo, cnt):
        out = np.empty(cnt, dtype=np.int64)
        for r in range(cnt):
            sigma = rng.permutation(n)  # 0-based positions
            out[r] = int((np.abs(sigma[cards - 1] + 1 - cards) <= band.radius_int).sum())
        return out

    return map_chunks(fn, reps, seed, f"uniform:{n}", workers)


def sample_shuffle_counts(
    band: BandConfig, times, reps: int, seed: int = 0, workers: int = 1
) -> np.ndarray:
    """Band counts of shuffled decks at each of ``times``.

    Returns shape ``(reps, len(times), 3)`` with columns ``|Delta|``,
    ``|Delta & A^t|`` and ``|D & A^t|``.  Replica ``r`` uses stream
    ``(seed, "shuffle", r)``; one run per replica is snapshotted at every
    time, which gives the same counts as separate runs to each time.
    """
    times = np.asarray(sorted(int(t) for t in times), dtype=np.int64)
    n = band.n

    def fn(_, lo, cnt):
        out = np.empty((cnt, times.shape[0], 3), dtype=np.int64)
        for r in range(cnt):
            rng = replica_rng(seed, "shuffle", lo + r)
            out[r] = _seq.shuffle_band_snapshots(n, times, rng, band.lo, band.hi, band.radius_int)
        return out

    # chunk size 1: each replica is a separate job for the pool
    return map_chunks(fn, reps, seed, "unused", workers, size=max(1, min(64, reps)))


# --- frequency checks ----------------------------------------------------------------


@dataclass
class FrequencyCheck:
    name: str
    frequency: float
    bound: float
    se: float
    slack: float
    passed: bool
    detail: dict = field(default_factory=dict)


def _freq_check(name, hits: np.ndarray, bound: float, z: float = 3.0, **detail) -> FrequencyCheck:
    reps = hits.shape[0]
    f = float(hits.mean())
    se = math.sqrt(max(f * (1 - f), 0.0) / reps)
    return FrequencyCheck(name, f, bound, se, z * se, f <= bound + z * se, detail)


def uniform_checks(totals: np.ndarray, band: BandConfig, ks=(2, 3), z: float = 3.0) -> list[FrequencyCheck]:
    """Mean formula and Chebyshev band under the uniform measure."""
    mom = uniform_delta_moments(band)
    reps = totals.shape[0]
    mean = float(totals.mean())
    se = float(totals.std(ddof=1) / math.sqrt(reps))
    out = [FrequencyCheck("uniform_mean", abs(mean - mom.mean), 0.0, se, z * se,
                          abs(mean - mom.mean) <= z * se, {"empirical": mean, "exact": mom.mean})]
    L = band.nlogn
    for k in ks:
        width = k * math.sqrt(2 * band.eps * band.alpha) * L**0.25
        out.append(_freq_check(f"uniform_chebyshev_k{k}", np.abs(totals - mom.mean) >= width, 1.0 / k**2, z,
                               width=width))
    return out


def schedule_checks(
    counts: np.ndarray, sched: ScheduleParams, ks=(2,), r: float = 0.5, z: float = 3.0
) -> list[FrequencyCheck]:
    """Survivor shortfall, removed-count concentration and the survivor mean at ``t_n``.

    ``counts`` has columns ``(|Delta|, |Delta & A|, |D & A|)``.
    """
    band = sched.band
    e, a, L = band.eps, band.alpha, band.nlogn
    v = sched.v
    surv = counts[:, 1]
    removed = counts[:, 0] - counts[:, 1]
    out = [
        _freq_check(
            "survivor_shortfall",
            surv <= (1 - r) * v * e * band.n * sched.p,
            (1 - r) ** -2 * (v**-2 - 1),
            z,
            level=(1 - r) * v * e * band.n * sched.p,
        )
    ]
    centre = 2 * e * a * (1 - sched.p) * math.sqrt(L)
    for k in ks:
        width = k * math.sqrt(6 * e * a) * L**0.25
        out.append(_freq_check(f"removed_deviation_k{k}", np.abs(removed - centre) >= width, 1.0 / k**2, z,
                               centre=centre, width=width))
    alive = counts[:, 2]
    mean = float(alive.mean())
    se = float(alive.std(ddof=1) / math.sqrt(alive.shape[0]))
    out.append(FrequencyCheck("survivor_mean", abs(mean - sched.K), 0.0, se, z * se,
                              abs(mean - sched.K) <= z * se, {"empirical": mean, "exact": sched.K}))
    return out


def write_counts_csv(path: str | Path, counts: np.ndarray, header_lines: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["replica", "total", "survivors", "removed"])
        for r, row in enumerate(counts):
            w.writerow([r, int(row[0]), int(row[1]), int(row[0] - row[1])])


# --- CLT and delocalization ----------------------------------------------------------


def lambda_n(n: int, j: int) -> tuple[float, str]:
    """Scaling constant of the position CLT and the regime it was taken from.

    Cards within ``sqrt(n) log n`` of the top (bottom) use ``j/n``
    (``(n-j)/n``); everything else uses ``gamma(1-gamma)`` with ``gamma = j/n``.
    """
    edge = math.sqrt(n) * math.log(n)
    if j <= edge:
        return j / n, "low"
    if n - j <= edge:
        return (n - j) / n, "high"
    g = j / n
    return g * (1 - g), "interior"


@dataclass
class CLTResult:
    n: int
    j: int
    t: int
    reps: int
    lam: float
    regime: str
    cond_rate: float  # n^2 / (t j (n-j))
    cond_time: float  # t / (j (n-j))
    ks: float
    pvalue: float
    applicable: bool
    samples: np.ndarray = field(repr=False)


def clt_test(n: int, j: int, t: int, reps: int, seed: int = 0, workers: int = 1) -> CLTResult:
    """KS distance of ``(Pi_t(j) - j) / sqrt(2 t lambda_n)`` given survival to N(0, 1)."""
    lam, regime = lambda_n(n, j)
    if lam <= 0:
        raise ValueError("lambda_n = 0: the card sits at the deck edge")
    denom = t * j * (n - j)
    cond_rate = n**2 / denom if denom else math.inf
    cond_time = t / (j * (n - j)) if j < n else math.inf
    if t == 0:
        return CLTResult(n, j, t, reps, lam, regime, cond_rate, cond_time, math.nan, math.nan, False,
                         np.zeros(reps))
    draws = sample_conditioned(n, j, t, reps, seed, workers=workers)
    z = (draws[:, 0] - j) / math.sqrt(2 * t * lam)
    res = stats.kstest(z, "norm")
    return CLTResult(n, j, t, reps, lam, regime, cond_rate, cond_time, float(res.statistic), float(res.pvalue),
                     True, z)


@dataclass
class DelocalizationResult:
    n: int
    t: int
    reps: int
    grid: np.ndarray
    alphas: list[float]
    freq: np.ndarray  # freq[a, g]
    bound: list[float]  # 4 Psi(alpha)
    se: np.ndarray
    passed: list[bool]


def delocalization_grid(n: int, size: int = 20) -> np.ndarray:
    """``size`` cards spread over the deck, always including ``floor(n/2)``."""
    g = np.rint(np.linspace(1, n, size)).astype(np.int64)
    if n // 2 not in g:
        g[np.argmin(np.abs(g - n // 2))] = n // 2
    return np.unique(g)


def delocalization_test(
    n: int, t: int, alphas, reps: int, seed: int = 0, grid: np.ndarray | None = None, z: float = 3.0, workers: int = 1
) -> DelocalizationResult:
    """Frequency of ``max_m |Pi_m(j) - j| > alpha sqrt(t/2)`` given survival, per grid card.

    All ``alphas`` are evaluated on the same sampled paths.
    """
    alphas = [float(a) for a in np.atleast_1d(alphas)]
    grid = delocalization_grid(n) if grid is None else np.asarray(grid, dtype=np.int64)
    freq = np.zeros((len(alphas), grid.shape[0]))
    for g, j in enumerate(grid):
        md = sample_conditioned(n, int(j), t, reps, seed, workers=workers)[:, 1]
        for a, alpha in enumerate(alphas):
            freq[a, g] = float((md > alpha * math.sqrt(t / 2)).mean())
    se = np.sqrt(freq * (1 - freq) / reps)
    bound = [4 * normal_tail(a) for a in alphas]
    passed = [bool((freq[a] <= bound[a] + z * se[a]).all()) for a in range(len(alphas))]
    return DelocalizationResult(n, t, reps, grid, alphas, freq, bound, se, passed)
