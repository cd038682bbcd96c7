# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled event-driven kernel for finite-chain simulations.

Mirrors _pykernel.simulate_finite_py exactly, including RNG draw order, so
the two backends are interchangeable and bit-identical.
"""

from libc.math cimport log

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static const uint64_t SM_GAMMA = 0x9E3779B97F4A7C15ULL;
    static inline uint64_t sm_next(uint64_t *state) {
        uint64_t z = (*state += SM_GAMMA);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static inline double sm_uniform(uint64_t *state) {
        return (sm_next(state) >> 11) * (1.0 / 9007199254740992.0);
    }
    """
    ctypedef unsigned long long uint64_t
    double sm_uniform(uint64_t *state) nogil


def simulate_finite_c(double[::1] rate, long[::1] cat_of, double[::1] alpha,
                      double[:, ::1] law_cum, long[:, ::1] law_vals,
                      long[::1] law_len, double[:, ::1] jump_cum,
                      long start, double[::1] sample_times, long cap,
                      unsigned long long rng_state):
    """One replicate; see the pure-Python twin for the algorithm."""
    cdef long ns = rate.shape[0]
    cdef long nt = sample_times.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] snaps_arr = np.zeros((nt, ns), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] net_arr = np.zeros(nt, dtype=np.int64)
    cdef long[:, ::1] snaps = snaps_arr
    cdef long[::1] net = net_arr
    cdef long[::1] counts = np.zeros(ns, dtype=np.int64)
    cdef uint64_t state = rng_state
    cdef long pop = 1, births = 0, deaths = 0
    cdef long p = 0, x, y, s, c, k, idx, q, events = 0
    cdef double W, t = 0.0, t_new, u, dt, r, acc, u4
    cdef bint truncated = False

    counts[start] = 1
    W = rate[start]
    with nogil:
        while p < nt:
            if W <= 0.0 or pop == 0:
                for q in range(p, nt):
                    for s in range(ns):
                        snaps[q, s] = counts[s]
                    net[q] = births - deaths
                p = nt
                break
            u = sm_uniform(&state)
            dt = -log(1.0 - u) / W
            t_new = t + dt
            while p < nt and sample_times[p] < t_new:
                for s in range(ns):
                    snaps[p, s] = counts[s]
                net[p] = births - deaths
                p += 1
            if p == nt:
                break
            t = t_new
            r = sm_uniform(&state) * W
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
            if c >= 0 and sm_uniform(&state) < alpha[c]:
                u4 = sm_uniform(&state)
                k = law_vals[c, law_len[c] - 1]
                for idx in range(law_len[c]):
                    if u4 < law_cum[c, idx]:
                        k = law_vals[c, idx]
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
                u4 = sm_uniform(&state)
                y = ns - 1
                for s in range(ns):
                    if u4 < jump_cum[x, s]:
                        y = s
                        break
                counts[x] -= 1
                counts[y] += 1
                W += rate[y] - rate[x]
            events += 1
            if events % 4096 == 0:
                W = 0.0
                for s in range(ns):
                    if counts[s]:
                        W += counts[s] * rate[s]
    return snaps_arr, net_arr, truncated
