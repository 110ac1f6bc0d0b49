"""Monte Carlo lower bounds on the TV distance to uniform.

The event ``E = {|Delta_alpha| >= 2 eps alpha sqrt(n log n) + k sqrt(2 eps alpha)(n log n)^(1/4)}``
is likely for the shuffled deck at ``t_n`` and unlikely for a uniform deck, so
``P_shuffle(E) - P_uniform(E)`` bounds the TV distance from below.  The
reported ``tv_lower`` subtracts the upper end of the uniform-side Wilson
interval from the lower end of the shuffle-side one.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import __version__
from .exact import all_permutations, evolve, tv_to_uniform
from .statistics import (
    BandConfig,
    ScheduleParams,
    analytic_reference,
    sample_shuffle_counts,
    sample_uniform_totals,
    schedule,
    schedule_at,
)

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "MCResult",
    "ScanTable",
    "ValidationRecord",
    "wilson_interval",
    "event_hits",
    "run_experiment",
    "cutoff_scan",
    "exact_small_n_validation",
    "load_config",
]

MIN_REPLICAS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    eps: float = 0.5
    alpha: float = 1.0
    k: float = 2.0
    c_n: float | None = 3.0
    t: int | None = None  # overrides c_n when given
    reps_shuffle: int = 10_000
    reps_uniform: int = 10_000
    seed: int = 0
    workers: int = 1
    confidence: float = 0.99

    def validate(self) -> None:
        if self.reps_shuffle < MIN_REPLICAS or self.reps_uniform < MIN_REPLICAS:
            raise ValueError(f"replica counts must be at least {MIN_REPLICAS}")
        if self.c_n is None and self.t is None:
            raise ValueError("give either c_n or an explicit t")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        BandConfig(self.n, self.eps, self.alpha)

    def schedule(self) -> ScheduleParams:
        if self.t is not None:
            return schedule_at(self.n, self.t, self.eps, self.alpha)
        return schedule(self.n, self.c_n, self.eps, self.alpha)

    def band(self) -> BandConfig:
        return BandConfig(self.n, self.eps, self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """SHA-256 over the canonical JSON of every field except ``workers``."""
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read a JSON or TOML experiment file; keyword overrides that are not None win."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        data = tomllib.loads(raw.decode())
    else:
        data = json.loads(raw)
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig.from_dict(data)
    cfg.validate()
    return cfg


def wilson_interval(hits: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("need at least one trial")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = hits / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return lo, hi


def event_hits(totals: np.ndarray, band: BandConfig, k: float) -> np.ndarray:
    """Vectorised threshold event, same arithmetic as ``statistics.threshold_event``."""
    e, a, L = band.eps, band.alpha, band.nlogn
    return (np.asarray(totals) - 2 * e * a * math.sqrt(L)) >= k * math.sqrt(2 * e * a) * L**0.25


@dataclass
class MCResult:
    config: ExperimentConfig
    config_hash: str
    t: int
    hits_shuffle: int
    hits_uniform: int
    p_shuffle: float
    p_uniform: float
    ci_shuffle: tuple[float, float]
    ci_uniform: tuple[float, float]
    tv_lower: float
    reference: float
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config"] = self.config.to_dict()
        d["ci_shuffle"] = list(self.ci_shuffle)
        d["ci_uniform"] = list(self.ci_uniform)
        d["seed"] = self.config.seed
        return d


def _assemble(config: ExperimentConfig, t: int, hs: int, hu: int, extra=None) -> MCResult:
    ns, nu = config.reps_shuffle, config.reps_uniform
    cs = wilson_interval(hs, ns, config.confidence)
    cu = wilson_interval(hu, nu, config.confidence)
    tv = min(1.0, max(0.0, cs[0] - cu[1]))
    return MCResult(config, config.hash(), t, hs, hu, hs / ns, hu / nu, cs, cu, tv,
                    analytic_reference(config.k, config.alpha), extra=extra or {})


def run_experiment(config: ExperimentConfig) -> MCResult:
    """Estimate both event probabilities at the configured time and bound TV from below."""
    config.validate()
    sched = config.schedule()
    band = config.band()
    counts = sample_shuffle_counts(band, [sched.t], config.reps_shuffle, config.seed, config.workers)[:, 0, :]
    totals_u = sample_uniform_totals(band, config.reps_uniform, config.seed, config.workers)
    hs = int(event_hits(counts[:, 0], band, config.k).sum())
    hu = int(event_hits(totals_u, band, config.k).sum())
    return _assemble(config, sched.t, hs, hu, {"schedule_residual": sched.residual, "n_p": sched.n_p})


@dataclass
class ScanTable:
    n: int
    results: list[MCResult]
    grid: list[float]
    counts: np.ndarray = field(repr=False)  # (reps, len(grid), 3) shuffle band counts
    uniform_totals: np.ndarray = field(repr=False)

    def rows(self) -> list[tuple]:
        return [(self.n, r.t, r.p_shuffle, r.p_uniform, r.tv_lower) for r in self.results]

    def to_csv(self, path: str | Path, header_lines: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["n", "t", "p_shuffle", "p_uniform", "tv_lower"])
            for row in self.rows():
                w.writerow([row[0], row[1], *(repr(float(x)) for x in row[2:])])


def cutoff_scan(config: ExperimentConfig, c_values=None, t_values=None) -> ScanTable:
    """``run_experiment`` at every grid point from a single set of shuffle runs.

    Each replica is run once to the largest time and snapshotted at every
    grid time; because a replica's moves do not depend on how long it is
    run, each grid point is identical to a separate ``run_experiment`` call.
    """
    if (c_values is None) == (t_values is None):
        raise ValueError("give exactly one of c_values or t_values")
    if c_values is not None:
        configs = [replace(config, c_n=float(c), t=None) for c in c_values]
        grid = [float(c) for c in c_values]
    else:
        configs = [replace(config, t=int(t)) for t in t_values]
        grid = [float(t) for t in t_values]
    for c in configs:
        c.validate()
    scheds = [c.schedule() for c in configs]
    times = [s.t for s in scheds]
    band = config.band()
    uniq = sorted(set(times))
    counts_u = sample_shuffle_counts(band, uniq, config.reps_shuffle, config.seed, config.workers)
    idx = [uniq.index(t) for t in times]
    counts = counts_u[:, idx, :]
    totals_u = sample_uniform_totals(band, config.reps_uniform, config.seed, config.workers)
    hu = int(event_hits(totals_u, band, config.k).sum())
    results = []
    for g, (cfg, s) in enumerate(zip(configs, scheds)):
        hs = int(event_hits(counts[:, g, 0], band, cfg.k).sum())
        results.append(_assemble(cfg, s.t, hs, hu, {"schedule_residual": s.residual, "n_p": s.n_p}))
    return ScanTable(config.n, results, grid, counts, totals_u)


@dataclass
class ValidationRecord:
    n: int
    t: int
    exact_shuffle: float
    exact_uniform: float
    exact_tv: float
    mc: MCResult
    z_shuffle: float
    z_uniform: float
    passed: bool


def _exact_event_mask(band: BandConfig, k: float) -> np.ndarray:
    perms = all_permutations(band.n).astype(np.int64)  # sigma rows
    cards = np.arange(band.lo, band.hi + 1)
    totals = (np.abs(perms[:, cards - 1] - cards) <= band.radius_int).sum(axis=1)
    return event_hits(totals, band, k)


def exact_small_n_validation(config: ExperimentConfig, tol_se: float = 4.0) -> ValidationRecord:
    """Exact event probabilities from the full law of the deck versus Monte Carlo."""
    config.validate()
    if config.n > 6:
        raise ValueError("exact validation is limited to n <= 6")
    t = config.schedule().t
    band = config.band()
    mask = _exact_event_mask(band, config.k)
    dist = evolve(config.n, t)
    ps = float(dist.probs[mask].sum())
    pu = float(mask.mean())
    mc = run_experiment(config)

    def z(p_hat, p, reps):
        se = math.sqrt(p * (1 - p) / reps)
        if se == 0:
            return 0.0 if p_hat == p else math.inf
        return abs(p_hat - p) / se

    zs = z(mc.p_shuffle, ps, config.reps_shuffle)
    zu = z(mc.p_uniform, pu, config.reps_uniform)
    dtv = tv_to_uniform(dist)
    return ValidationRecord(config.n, t, ps, pu, dtv, mc, zs, zu,
                            zs <= tol_se and zu <= tol_se and mc.tv_lower <= dtv + 1e-12)
