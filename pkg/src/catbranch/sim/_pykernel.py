"""Pure-Python event-driven simulation kernels.

The compiled kernel in _kernel.pyx mirrors this module statement for
statement, including the order in which random numbers are drawn, so both
backends produce identical trajectories from the same seed.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15


def mix_seed(seed: int, index: int) -> int:
    """Derive the per-replicate RNG state from the run seed and replicate index.

    The combined value is passed through two finalizer rounds so that
    consecutive indices start at effectively random counter offsets;
    without this, streams spaced by exact multiples of the splitmix64
    increment would overlap draw for draw.
    """
    z = (seed + (index + 1) * _GAMMA) & _MASK
    for _ in range(2):
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z ^= z >> 31
    return z


def splitmix64_next(state: int) -> tuple[int, int]:
    """One step of the splitmix64 generator: (new_state, 64-bit output)."""
    state = (state + _GAMMA) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


class _Rng:
    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        self.state, z = splitmix64_next(self.state)
        return (z >> 11) * (1.0 / 9007199254740992.0)


def simulate_finite_py(rate, cat_of, alpha, law_cum, law_vals, jump_cum,
                       start: int, sample_times, cap: int, rng_state: int):
    """One replicate on a finite chain with aggregated per-state counts.

    Returns (snapshots (n_times, n_states) int64, net_births (n_times,) int64,
    truncated flag). All sojourn clocks are exponential, so the aggregate
    process is simulated exactly: wait Exp(total weight), pick the site in
    proportion to count * rate, then branch or jump.
    """
    rng = _Rng(rng_state)
    ns = len(rate)
    nt = len(sample_times)
    counts = [0] * ns
    counts[start] = 1
    pop = 1
    births = 0
    deaths = 0
    W = rate[start]
    snaps = np.zeros((nt, ns), dtype=np.int64)
    net = np.zeros(nt, dtype=np.int64)
    t = 0.0
    p = 0
    truncated = False
    events = 0
    while p < nt:
        if W <= 0.0 or pop == 0:
            for q in range(p, nt):
                snaps[q, :] = counts
                net[q] = births - deaths
            p = nt
            break
        u = rng.uniform()
        dt = -math.log(1.0 - u) / W
        t_new = t + dt
        while p < nt and sample_times[p] < t_new:
            snaps[p, :] = counts
            net[p] = births - deaths
            p += 1
        if p == nt:
            break
        t = t_new
        # choose the site of the next event
        r = rng.uniform() * W
        acc = 0.0
        x = ns - 1
        for s in range(ns):
            if counts[s] == 0:
                continue
            acc += counts[s] * rate[s]
            if acc >= r:
                x = s
                break
        c = cat_of[x]
        if c >= 0 and rng.uniform() < alpha[c]:
            u4 = rng.uniform()
            cum = law_cum[c]
            k = law_vals[c][-1]
            for idx in range(len(cum)):
                if u4 < cum[idx]:
                    k = law_vals[c][idx]
                    break
            counts[x] += k - 1
            pop += k - 1
            births += k
            deaths += 1
            W += (k - 1) * rate[x]
            if pop > cap:
                truncated = True
                break
        else:
            u4 = rng.uniform()
            cum = jump_cum[x]
            y = ns - 1
            for s in range(ns):
                if u4 < cum[s]:
                    y = s
                    break
            counts[x] -= 1
            counts[y] += 1
            W += rate[y] - rate[x]
        events += 1
        if events % 4096 == 0:
            # periodic exact refresh kills float drift in the total weight
            W = 0.0
            for s in range(ns):
                if counts[s]:
                    W += counts[s] * rate[s]
    return snaps, net, truncated


def simulate_lattice_py(model_tables, start, sample_times, cap: int,
                        rng_state: int, tracked):
    """One replicate on a lattice, sparse dict of occupied sites.

    model_tables is (cat_site_map, alpha, law_cum, law_vals, cat_rate,
    walk_rate, jump_cum, jump_offsets): catalysts give their own sojourn
    rate; everywhere else the walk's total jump rate applies.
    """
    (cat_site_map, alpha, law_cum, law_vals, cat_rate,
     walk_rate, jump_cum, jump_offsets) = model_tables
    rng = _Rng(rng_state)
    nt = len(sample_times)
    counts: dict = {start: 1}
    pop = 1
    births = 0
    deaths = 0

    def site_rate(s):
        c = cat_site_map.get(s, -1)
        return cat_rate[c] if c >= 0 else walk_rate

    W = site_rate(start)
    snaps = np.zeros((nt, len(tracked)), dtype=np.int64)
    totals = np.zeros(nt, dtype=np.int64)
    net = np.zeros(nt, dtype=np.int64)

    def record(q):
        for ti, site in enumerate(tracked):
            snaps[q, ti] = counts.get(site, 0)
        totals[q] = pop
        net[q] = births - deaths

    t = 0.0
    p = 0
    truncated = False
    events = 0
    while p < nt:
        if W <= 0.0 or pop == 0:
            for q in range(p, nt):
                record(q)
            p = nt
            break
        u = rng.uniform()
        dt = -math.log(1.0 - u) / W
        t_new = t + dt
        while p < nt and sample_times[p] < t_new:
            record(p)
            p += 1
        if p == nt:
            break
        t = t_new
        r = rng.uniform() * W
        acc = 0.0
        x = None
        for s, cnt in counts.items():
            acc += cnt * site_rate(s)
            if acc >= r:
                x = s
                break
        if x is None:
            x = s
        c = cat_site_map.get(x, -1)
        if c >= 0 and rng.uniform() < alpha[c]:
            u4 = rng.uniform()
            cum = law_cum[c]
            k = law_vals[c][-1]
            for idx in range(len(cum)):
                if u4 < cum[idx]:
                    k = law_vals[c][idx]
                    break
            counts[x] = counts.get(x, 0) + k - 1
            if counts[x] == 0:
                del counts[x]
            pop += k - 1
            births += k
            deaths += 1
            W += (k - 1) * site_rate(x)
            if pop > cap:
                truncated = True
                break
        else:
            u4 = rng.uniform()
            y = None
            for idx in range(len(jump_cum)):
                if u4 < jump_cum[idx]:
                    y = tuple(a + b for a, b in zip(x, jump_offsets[idx]))
                    break
            if y is None:
                y = tuple(a + b for a, b in zip(x, jump_offsets[-1]))
            counts[x] -= 1
            if counts[x] == 0:
                del counts[x]
            counts[y] = counts.get(y, 0) + 1
            W += site_rate(y) - site_rate(x)
        events += 1
        if events % 4096 == 0:
            W = 0.0
            for s, cnt in counts.items():
                W += cnt * site_rate(s)
    return snaps, totals, net, truncated
