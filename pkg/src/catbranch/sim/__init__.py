"""Event-driven Monte Carlo estimation of local and total factorial moments.

Replicates are exact trajectories of the particle system (every clock is
exponential, so there is no discretization error), each driven by its own
counter-derived RNG stream so results are bit-identical no matter how the
replicates are distributed over worker processes. A compiled kernel is used
for finite chains when available, with a pure-Python fallback that draws the
same random numbers in the same order.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..chain import FiniteChain, LatticeWalk
from ..errors import (
    AllReplicatesTruncated,
    MomentLawMismatch,
    PopulationCapExceeded,
    ValidationError,
)
from ..model import CbpModel
from . import _pykernel
from ._pykernel import mix_seed

try:  # compiled kernel is optional; the pure path is always present
    from ._ckernel import simulate_finite_c
except ImportError:  # pragma: no cover - depends on build environment
    simulate_finite_c = None

HAVE_COMPILED = simulate_finite_c is not None
_FORCE_PURE = os.environ.get("CATBRANCH_PURE", "") not in ("", "0")

TOTAL = "TOTAL"


def backend_name() -> str:
    return "compiled" if (HAVE_COMPILED and not _FORCE_PURE) else "python"


@dataclass(frozen=True)
class SimConfig:
    """Run parameters for a Monte Carlo experiment."""

    start: object
    horizon: float
    sample_times: tuple
    replicates: int
    seed: int = 0
    population_cap: int = 10_000_000

    def __post_init__(self):
        times = tuple(float(t) for t in self.sample_times)
        object.__setattr__(self, "sample_times", times)
        if not times or list(times) != sorted(times):
            raise ValidationError("sample_times must be nonempty and sorted")
        if times[0] < 0 or times[-1] > self.horizon:
            raise ValidationError("sample_times must lie in [0, horizon]")
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.population_cap < 1:
            raise ValidationError("population_cap must be >= 1")


@dataclass(frozen=True)
class MomentEstimate:
    """One estimated factorial moment with its uncertainty."""

    time: float
    site: object  # state label, or TOTAL
    order: int
    estimate: float
    stderr: float
    replicates: int
    truncated: int


def _finite_tables(model: CbpModel):
    chain = model.chain
    ns = len(chain.states)
    rate = np.empty(ns)
    cat_of = np.full(ns, -1, dtype=np.int64)
    for x in range(ns):
        rate[x] = -chain.Q[x, x]
    for c, cat in enumerate(model.catalysts):
        if cat.law is None:
            raise MomentLawMismatch(
                f"catalyst at {cat.site!r} needs an explicit offspring law to simulate"
            )
        k = chain.index(cat.site)
        rate[k] = cat.beta
        cat_of[k] = c
    ncat = model.n_catalysts
    alpha = np.array([c.alpha for c in model.catalysts])
    max_len = max(len(c.law) for c in model.catalysts)
    law_cum = np.ones((ncat, max_len))
    law_vals = np.zeros((ncat, max_len), dtype=np.int64)
    law_len = np.zeros(ncat, dtype=np.int64)
    for c, cat in enumerate(model.catalysts):
        vals = [k for k, _ in cat.law]
        probs = [p for _, p in cat.law]
        law_len[c] = len(vals)
        law_vals[c, : len(vals)] = vals
        law_vals[c, len(vals):] = vals[-1]
        law_cum[c, : len(vals)] = np.cumsum(probs)
    jump_cum = np.zeros((ns, ns))
    for x in range(ns):
        probs = np.maximum(chain.Q[x, :], 0.0) / (-chain.Q[x, x])
        probs[x] = 0.0
        jump_cum[x, :] = np.cumsum(probs)
    return rate, cat_of, alpha, law_cum, law_vals, law_len, jump_cum


def _lattice_tables(model: CbpModel):
    walk = model.chain
    cat_site_map = {}
    for c, cat in enumerate(model.catalysts):
        if cat.law is None:
            raise MomentLawMismatch(
                f"catalyst at {cat.site!r} needs an explicit offspring law to simulate"
            )
        cat_site_map[cat.site] = c
    alpha = [c.alpha for c in model.catalysts]
    law_cum = [list(np.cumsum([p for _, p in c.law])) for c in model.catalysts]
    law_vals = [[k for k, _ in c.law] for c in model.catalysts]
    cat_rate = [c.beta for c in model.catalysts]
    offsets = sorted(walk.kernel)
    rates = [walk.kernel[o] for o in offsets]
    jump_cum = list(np.cumsum(rates) / walk.total_rate)
    return (cat_site_map, alpha, law_cum, law_vals, cat_rate,
            walk.total_rate, jump_cum, offsets)


def _finite_chunk(args):
    (tables, start, times, cap, seed, i0, i1, force_pure) = args
    rate, cat_of, alpha, law_cum, law_vals, law_len, jump_cum = tables
    nt = len(times)
    ns = len(rate)
    snaps = np.zeros((i1 - i0, nt, ns), dtype=np.int64)
    net = np.zeros((i1 - i0, nt), dtype=np.int64)
    trunc = np.zeros(i1 - i0, dtype=bool)
    use_c = HAVE_COMPILED and not _FORCE_PURE and not force_pure
    times_arr = np.asarray(times, dtype=float)
    if use_c:
        for i in range(i0, i1):
            s, n, tr = simulate_finite_c(rate, cat_of, alpha, law_cum, law_vals,
                                         law_len, jump_cum, start, times_arr,
                                         cap, mix_seed(seed, i))
            snaps[i - i0] = s
            net[i - i0] = n
            trunc[i - i0] = tr
    else:
        rate_l = list(rate)
        cat_l = list(cat_of)
        alpha_l = list(alpha)
        cum_l = [list(law_cum[c, : law_len[c]]) for c in range(len(alpha_l))]
        val_l = [list(law_vals[c, : law_len[c]]) for c in range(len(alpha_l))]
        jump_l = [list(row) for row in jump_cum]
        for i in range(i0, i1):
            s, n, tr = _pykernel.simulate_finite_py(
                rate_l, cat_l, alpha_l, cum_l, val_l, jump_l, start,
                list(times), cap, mix_seed(seed, i))
            snaps[i - i0] = s
            net[i - i0] = n
            trunc[i - i0] = tr
    return i0, snaps, net, trunc


def _lattice_chunk(args):
    (tables, start, times, cap, seed, i0, i1, tracked) = args
    nt = len(times)
    snaps = np.zeros((i1 - i0, nt, len(tracked)), dtype=np.int64)
    totals = np.zeros((i1 - i0, nt), dtype=np.int64)
    net = np.zeros((i1 - i0, nt), dtype=np.int64)
    trunc = np.zeros(i1 - i0, dtype=bool)
    for i in range(i0, i1):
        s, tot, n, tr = _pykernel.simulate_lattice_py(
            tables, start, list(times), cap, mix_seed(seed, i), tracked)
        snaps[i - i0] = s
        totals[i - i0] = tot
        net[i - i0] = n
        trunc[i - i0] = tr
    return i0, snaps, totals, net, trunc


def _workers() -> int:
    env = os.environ.get("CATBRANCH_WORKERS", "")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_replicates(model: CbpModel, config: SimConfig, workers: int | None = None,
                   force_pure: bool = False):
    """All replicate trajectories at the sample times.

    Returns (site_labels, snaps, totals, net_births, truncated) where snaps
    has shape (replicates, n_times, n_sites). Deterministic in (model,
    config) regardless of worker count or backend.
    """
    workers = _workers() if workers is None else max(1, workers)
    times = config.sample_times
    reps = config.replicates
    chunk = max(1, -(-reps // (workers * 4)))
    if isinstance(model.chain, FiniteChain):
        chain = model.chain
        tables = _finite_tables(model)
        start = chain.index(config.start)
        jobs = [(tables, start, times, config.population_cap, config.seed,
                 i0, min(i0 + chunk, reps), force_pure)
                for i0 in range(0, reps, chunk)]
        runner = _finite_chunk
        labels = list(chain.states)
    elif isinstance(model.chain, LatticeWalk):
        tables = _lattice_tables(model)
        start = tuple(int(c) for c in config.start)
        tracked = list(dict.fromkeys(list(model.sites) + [start]))
        jobs = [(tables, start, times, config.population_cap, config.seed,
                 i0, min(i0 + chunk, reps), tracked)
                for i0 in range(0, reps, chunk)]
        runner = _lattice_chunk
        labels = tracked
    else:
        raise ValidationError("unsupported chain kind for simulation")

    nt = len(times)
    snaps = np.zeros((reps, nt, len(labels)), dtype=np.int64)
    totals = np.zeros((reps, nt), dtype=np.int64)
    net = np.zeros((reps, nt), dtype=np.int64)
    trunc = np.zeros(reps, dtype=bool)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(runner, jobs))
    else:
        results = [runner(job) for job in jobs]
    for res in results:
        if runner is _finite_chunk:
            i0, s, n, tr = res
            tot = s.sum(axis=2)
        else:
            i0, s, tot, n, tr = res
        snaps[i0: i0 + s.shape[0]] = s
        totals[i0: i0 + s.shape[0]] = tot
        net[i0: i0 + s.shape[0]] = n
        trunc[i0: i0 + s.shape[0]] = tr
    return labels, snaps, totals, net, trunc


def _falling(x: np.ndarray, n: int) -> np.ndarray:
    out = np.ones_like(x, dtype=float)
    for r in range(n):
        out *= x - r
    return out


def _jackknife_se(x: np.ndarray) -> float:
    """Jackknife standard error of the sample mean."""
    n = len(x)
    if n < 2:
        return 0.0
    S = x.sum()
    loo = (S - x) / (n - 1)
    center = loo.mean()
    return float(np.sqrt((n - 1) / n * np.sum((loo - center) ** 2)))


def estimate_moments(model: CbpModel, config: SimConfig, orders=(1,),
                     workers: int | None = None,
                     force_pure: bool = False) -> list[MomentEstimate]:
    """Monte Carlo estimates of local and total factorial moments.

    Truncated replicates (population cap hit) are excluded from every
    estimator and reported through the truncated count.
    """
    labels, snaps, totals, net, trunc = run_replicates(
        model, config, workers=workers, force_pure=force_pure)
    keep = ~trunc
    n_keep = int(keep.sum())
    n_trunc = int(trunc.sum())
    if n_keep == 0:
        raise AllReplicatesTruncated(
            "every replicate hit the population cap; raise population_cap"
        )
    out = []
    for ti, t in enumerate(config.sample_times):
        for si, site in enumerate(labels):
            x = snaps[keep, ti, si]
            for n in orders:
                f = _falling(x, n)
                out.append(MomentEstimate(t, site, n, float(f.mean()),
                                          _jackknife_se(f), n_keep, n_trunc))
        x = totals[keep, ti]
        for n in orders:
            f = _falling(x, n)
            out.append(MomentEstimate(t, site=TOTAL, order=n,
                                      estimate=float(f.mean()),
                                      stderr=_jackknife_se(f),
                                      replicates=n_keep, truncated=n_trunc))
    return out


def write_estimates_csv(estimates, path):
    """CSV with header time,site,order,estimate,stderr,replicates,truncated."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "site", "order", "estimate", "stderr",
                    "replicates", "truncated"])
        for e in estimates:
            w.writerow([f"{e.time:.12g}", e.site, e.order,
                        f"{e.estimate:.12g}", f"{e.stderr:.12g}",
                        e.replicates, e.truncated])
