"""Underlying Markov chain and hitting times under taboo.

Two chain flavours are supported: an explicit finite conservative generator,
and a translation-invariant lattice random walk given by a finite-support
jump kernel.  All Laplace-Stieltjes transforms of taboo hitting times are
obtained from first-step linear systems; lambda-derivatives are propagated
exactly through the solve rather than by numeric differencing.

Lattice quantities are computed on truncated boxes.  For ``lam > 0`` the
truncated values increase monotonically to the limit and the radius is grown
until successive values stabilize.  At ``lam = 0`` the boundary error decays
only like ``1/R``, so two special policies apply:

* symmetric nearest-neighbour walks on Z are recurrent and excursions beyond
  any window containing the sites of interest re-enter at the window edge
  with probability one; censoring the embedded jump chain on that window is
  therefore *exact* for all hitting probabilities;
* transient walks use Richardson extrapolation in ``1/R`` across doubled
  radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from .errors import (
    EmptyModel,
    GreenDivergent,
    NegativeOffDiagonal,
    NotIrreducible,
    RowSumNonzero,
    SingularSystem,
    TruncationNotConverged,
    Undecided,
)

_ROWSUM_RTOL = 1e-12


@dataclass(frozen=True)
class TruncationPolicy:
    """Radius schedule and stopping tolerance for lattice truncation."""

    radius0: int = 16
    growth: float = 2.0
    eps: float = 1e-8
    max_rounds: int = 12
    # relative stopping tolerance for extrapolated lam=0 values on
    # transient walks (plain doubling cannot reach ``eps`` there)
    eps_extrap: float = 5e-5


@dataclass(frozen=True)
class TabooLst:
    """Laplace-Stieltjes transform of a taboo hitting time at one lambda.

    ``value`` is the transform, ``dvalue`` its lambda-derivative (may be
    ``-inf`` when the underlying mean hitting time is infinite), ``atom0``
    the probability mass at t = 0 and ``total`` the transform at lambda = 0,
    i.e. the total hitting probability under taboo.
    """

    value: float
    dvalue: float
    atom0: float
    total: float

    def __post_init__(self):
        if not (-1e-12 <= self.atom0 <= self.value + 1e-12):
            raise AssertionError("atom0 outside [0, value]")
        if self.value > self.total + 1e-6:
            raise AssertionError("value exceeds total hitting probability")


class ChainModel:
    """Common interface of the two chain flavours."""

    kind: str

    def neighbors(self, x):
        """Iterate ``(y, rate)`` over states reachable from ``x`` in one jump."""
        raise NotImplementedError

    def q(self, x, y):
        raise NotImplementedError

    def qx(self, x):
        """Diagonal generator entry q(x, x) < 0."""
        raise NotImplementedError


class FiniteChain(ChainModel):
    """Conservative irreducible CTMC with an explicit generator matrix."""

    kind = "FiniteExplicit"

    def __init__(self, states, generator):
        states = tuple(states)
        Q = np.asarray(generator, dtype=float)
        if len(states) == 0 or Q.size == 0:
            raise EmptyModel("empty chain description")
        if Q.shape != (len(states), len(states)):
            raise EmptyModel("generator shape does not match state count")
        if len(set(states)) != len(states):
            raise EmptyModel("duplicate state labels")
        off = Q - np.diag(np.diag(Q))
        if np.any(off < 0):
            raise NegativeOffDiagonal("negative off-diagonal rate")
        scale = np.maximum(np.abs(np.diag(Q)), 1.0)
        if np.any(np.abs(Q.sum(axis=1)) > _ROWSUM_RTOL * scale):
            raise RowSumNonzero("generator rows must sum to zero")
        if np.any(np.diag(Q) >= 0):
            raise NotIrreducible("q(x, x) must be strictly negative")
        n_comp, _ = csgraph.connected_components(
            sp.csr_matrix(off > 0), directed=True, connection="strong"
        )
        if n_comp != 1:
            raise NotIrreducible("generator support graph is not strongly connected")
        self.states = states
        self.Q = Q
        self._index = {s: i for i, s in enumerate(states)}

    def index(self, x):
        try:
            return self._index[x]
        except KeyError:
            raise KeyError(f"unknown state {x!r}") from None

    def neighbors(self, x):
        i = self.index(x)
        for j, rate in enumerate(self.Q[i]):
            if j != i and rate > 0:
                yield self.states[j], rate

    def q(self, x, y):
        return self.Q[self.index(x), self.index(y)]

    def qx(self, x):
        i = self.index(x)
        return self.Q[i, i]


def _lattice_fills_zd(offsets, dim):
    """True iff the integer span of ``offsets`` is all of Z^dim."""
    rows = [list(o) for o in offsets]
    # integer row reduction to Hermite-like form; the generated lattice is
    # Z^d iff full rank with unit diagonal product
    mat = [r[:] for r in rows]
    rank = 0
    for col in range(dim):
        pivot = None
        for r in range(rank, len(mat)):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return False
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        # gcd-reduce the whole column below the pivot
        changed = True
        while changed:
            changed = False
            for r in range(rank + 1, len(mat)):
                if mat[r][col] == 0:
                    continue
                if abs(mat[r][col]) < abs(mat[rank][col]):
                    mat[rank], mat[r] = mat[r], mat[rank]
                q = mat[r][col] // mat[rank][col]
                if q:
                    mat[r] = [a - q * b for a, b in zip(mat[r], mat[rank])]
                    changed = True
                if mat[r][col] != 0:
                    changed = True
        rank += 1
    det = 1
    for i in range(dim):
        det *= mat[i][i]
    return abs(det) == 1


class LatticeWalk(ChainModel):
    """Translation-invariant walk on Z^d with a finite-support jump kernel."""

    kind = "LatticeWalk"

    def __init__(self, dim, kernel, truncation: TruncationPolicy | None = None,
                 recurrent_override: bool | None = None):
        kernel = {tuple(int(c) for c in off): float(rate)
                  for off, rate in dict(kernel).items()}
        if dim < 1 or not kernel:
            raise EmptyModel("empty lattice kernel")
        for off, rate in kernel.items():
            if len(off) != dim:
                raise EmptyModel(f"offset {off} has wrong dimension")
            if all(c == 0 for c in off):
                raise NegativeOffDiagonal("kernel must not contain the zero offset")
            if rate <= 0:
                raise NegativeOffDiagonal("kernel rates must be positive")
        if not _lattice_fills_zd(kernel.keys(), dim):
            raise NotIrreducible("jump kernel does not generate the lattice")
        self.dim = dim
        self.kernel = kernel
        self.total_rate = sum(kernel.values())
        if truncation is None:
            # box sizes scale like (2R)^d: keep memory bounded in high d
            radius0 = {1: 32, 2: 12}.get(dim, 6)
            max_rounds = {1: 14, 2: 7}.get(dim, 7)
            growth = {1: 2.0, 2: 1.6}.get(dim, 1.5)
            truncation = TruncationPolicy(radius0=radius0, max_rounds=max_rounds,
                                          growth=growth)
        self.truncation = truncation
        self.recurrent_override = recurrent_override

    def neighbors(self, x):
        for off, rate in self.kernel.items():
            yield tuple(a + b for a, b in zip(x, off)), rate

    def q(self, x, y):
        off = tuple(b - a for a, b in zip(x, y))
        if all(c == 0 for c in off):
            return -self.total_rate
        return self.kernel.get(off, 0.0)

    def qx(self, x):
        return -self.total_rate

    @property
    def is_symmetric_nn_1d(self):
        """Symmetric nearest-neighbour walk on Z (recurrent; censoring exact)."""
        if self.dim != 1:
            return False
        if set(self.kernel) != {(1,), (-1,)}:
            return False
        return self.kernel[(1,)] == self.kernel[(-1,)]


def validate(raw) -> ChainModel:
    """Build a validated :class:`ChainModel` from a raw description.

    Accepts either an existing model (returned as-is), a mapping with keys
    ``states``/``generator`` or ``lattice``, or a pair ``(states, generator)``.
    """
    if isinstance(raw, ChainModel):
        return raw
    if isinstance(raw, dict):
        if "lattice" in raw:
            lat = raw["lattice"]
            trunc = lat.get("truncation")
            policy = TruncationPolicy(**trunc) if trunc else TruncationPolicy()
            kernel = {tuple(off): rate for off, rate in lat["kernel"]}
            return LatticeWalk(lat["dim"], kernel, policy,
                               recurrent_override=lat.get("recurrent"))
        return FiniteChain(raw["states"], raw["generator"])
    states, generator = raw
    return FiniteChain(states, generator)


# ---------------------------------------------------------------------------
# finite-chain linear systems


def _finite_taboo_solve(Q, y, taboo, lam):
    """Solve the first-step system on U = S \\ (taboo + {y}).

    Returns ``(U, u, du)`` where ``u[z] = E_z[exp(-lam T_y); T_y < T_taboo]``
    (hitting including the initial sojourn at z) and ``du`` its exact
    lambda-derivative, obtained from one extra solve with the same
    factorization.
    """
    n = Q.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[list(taboo)] = False
    mask[y] = False
    U = np.flatnonzero(mask)
    if U.size == 0:
        return U, np.empty(0), np.empty(0)
    A = lam * np.eye(U.size) - Q[np.ix_(U, U)]
    b = Q[U, y]
    try:
        lu, piv = scipy.linalg.lu_factor(A)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - invariants bar this
        raise SingularSystem(str(exc)) from exc
    u = scipy.linalg.lu_solve((lu, piv), b)
    du = -scipy.linalg.lu_solve((lu, piv), u)
    return U, u, du


def _finite_bar_from_u(Q, x, y, taboo, U, u, du):
    """First-jump decomposition of the after-leaving-x transform."""
    n = Q.shape[0]
    val = np.zeros(n)
    dval = np.zeros(n)
    val[U] = u
    dval[U] = du
    qxx = Q[x, x]
    bar = 0.0
    dbar = 0.0
    taboo = set(taboo)
    for z in range(n):
        if z == x or Q[x, z] <= 0:
            continue
        p = -Q[x, z] / qxx
        if z == y:
            bar += p
        elif z not in taboo:
            bar += p * val[z]
            dbar += p * dval[z]
    atom0 = (-Q[x, y] / qxx) if x != y else 0.0
    return bar, dbar, atom0


class _FiniteLstSolver:
    """Caches lam=0 solves per (y, taboo) for a finite chain."""

    def __init__(self, chain: FiniteChain):
        self.chain = chain

    @lru_cache(maxsize=4096)
    def _solve(self, y, taboo, lam):
        return _finite_taboo_solve(self.chain.Q, y, taboo, lam)

    def bar(self, x, y, taboo, lam):
        Q = self.chain.Q
        U, u, du = self._solve(y, taboo, lam)
        bar, dbar, atom0 = _finite_bar_from_u(Q, x, y, taboo, U, u, du)
        U0, u0, _ = self._solve(y, taboo, 0.0)
        total, _, _ = _finite_bar_from_u(Q, x, y, taboo, U0, u0, np.zeros_like(u0))
        return bar, dbar, atom0, total

    def hit(self, x, y, taboo, lam):
        Q = self.chain.Q
        qxx = Q[x, x]
        bar, dbar, atom0, total = self.bar(x, y, taboo, lam)
        c = -qxx / (lam - qxx)
        dc = qxx / (lam - qxx) ** 2
        return c * bar, dc * bar + c * dbar, total


# ---------------------------------------------------------------------------
# lattice truncation machinery


def _box_states(center_sites, dim, radius):
    """All lattice points within sup-norm ``radius`` of the site hull."""
    lo = [min(s[k] for s in center_sites) - radius for k in range(dim)]
    hi = [max(s[k] for s in center_sites) + radius for k in range(dim)]
    shape = tuple(h - l + 1 for l, h in zip(lo, hi))
    return tuple(lo), shape


def _box_index(point, lo, shape):
    idx = 0
    for k, (c, l, s) in enumerate(zip(point, lo, shape)):
        r = c - l
        if r < 0 or r >= s:
            return -1
        idx = idx * s + r
    return idx


def _build_box_operator(walk: LatticeWalk, lo, shape, lam):
    """Sparse ``lam*I - Q`` on the box with killing outside (Dirichlet)."""
    n = int(np.prod(shape))
    dim = walk.dim
    grids = np.meshgrid(*[np.arange(l, l + s) for l, s in zip(lo, shape)],
                        indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    rows, cols, vals = [], [], []
    idx_all = np.arange(n)
    for off, rate in walk.kernel.items():
        tgt = coords + np.array(off)
        ok = np.ones(n, dtype=bool)
        tidx = np.zeros(n, dtype=np.int64)
        for k in range(dim):
            r = tgt[:, k] - lo[k]
            ok &= (r >= 0) & (r < shape[k])
            tidx = tidx * shape[k] + np.clip(r, 0, shape[k] - 1)
        rows.append(idx_all[ok])
        cols.append(tidx[ok])
        vals.append(np.full(ok.sum(), -rate))
    rows.append(idx_all)
    cols.append(idx_all)
    vals.append(np.full(n, lam + walk.total_rate))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return A


def _sparse_solve(A, b, symmetric):
    n = A.shape[0]
    if n <= 40000:
        return spla.spsolve(A.tocsc(), b)
    if symmetric:
        try:
            import pyamg

            ml = pyamg.smoothed_aggregation_solver(A.tocsr())
            x = ml.solve(b, tol=1e-12, accel="cg")
            return x
        except Exception:
            pass
        x, info = spla.cg(A, b, rtol=1e-12, atol=0.0, maxiter=20 * int(n ** 0.5) + 2000)
    else:
        x, info = spla.bicgstab(A, b, rtol=1e-12, atol=0.0, maxiter=20000)
    if info != 0:
        raise SingularSystem(f"iterative solve failed (info={info})")
    return x


def _kernel_symmetric(walk: LatticeWalk):
    return all(
        abs(rate - walk.kernel.get(tuple(-c for c in off), 0.0)) < 1e-15
        for off, rate in walk.kernel.items()
    )


def _lattice_taboo_once(walk, x, y, taboo, lam, radius):
    """Truncated (killed outside the box) taboo transform at one radius."""
    special = [x, y, *taboo]
    lo, shape = _box_states(special, walk.dim, radius)
    A = _build_box_operator(walk, lo, shape, lam)
    n = A.shape[0]
    yi = _box_index(y, lo, shape)
    drop = {yi}
    for h in taboo:
        drop.add(_box_index(h, lo, shape))
    keep = np.array([i for i in range(n) if i not in drop])
    pos = -np.ones(n, dtype=np.int64)
    pos[keep] = np.arange(keep.size)
    AU = A[np.ix_(keep, keep)].tocsr()
    b = -A[keep, yi].toarray().ravel()
    symmetric = _kernel_symmetric(walk)
    u = _sparse_solve(AU, b, symmetric)
    du = -_sparse_solve(AU, u, symmetric)
    # first-jump decomposition at x
    qxx = -walk.total_rate
    bar = dbar = 0.0
    taboo_set = set(taboo)
    for z, rate in walk.neighbors(x):
        p = rate / walk.total_rate
        if z == y:
            bar += p
        elif z not in taboo_set:
            zi = _box_index(z, lo, shape)
            if zi >= 0 and pos[zi] >= 0:
                bar += p * u[pos[zi]]
                dbar += p * du[pos[zi]]
    atom0 = walk.q(x, y) / walk.total_rate if x != y else 0.0
    return bar, dbar, atom0


def _censored_nn_bar(walk, x, y, taboo):
    """Exact lam=0 taboo hitting probability for a symmetric NN walk on Z.

    Censors the embedded jump chain on a finite window containing all sites
    of interest; outward jumps at the window edges re-enter at the edge with
    probability one (recurrence), and such a re-entry counts as a fresh visit
    to the edge state.
    """
    sites = [x, y, *taboo]
    lo = min(s[0] for s in sites) - 1
    hi = max(s[0] for s in sites) + 1
    n = hi - lo + 1
    P = np.zeros((n, n))
    for i in range(n):
        left = i - 1 if i > 0 else 0
        right = i + 1 if i < n - 1 else n - 1
        P[i, left] += 0.5
        P[i, right] += 0.5
    yi = y[0] - lo
    taboo_idx = {h[0] - lo for h in taboo}
    U = [i for i in range(n) if i != yi and i not in taboo_idx]
    posU = {i: k for k, i in enumerate(U)}
    A = np.eye(len(U)) - P[np.ix_(U, U)]
    b = P[np.ix_(U, [yi])].ravel()
    h = np.linalg.solve(A, b)
    xi = x[0] - lo
    bar = 0.0
    for z in range(n):
        p = P[xi, z]
        if p == 0:
            continue
        if z == yi:
            bar += p
        elif z not in taboo_idx:
            bar += p * h[posU[z]]
    atom0 = walk.q(x, y) / walk.total_rate if x != y else 0.0
    return bar, atom0


def _radius_schedule(policy: TruncationPolicy):
    r = policy.radius0
    for _ in range(policy.max_rounds):
        yield int(r)
        r = math.ceil(r * policy.growth)


def _richardson(radii, vals):
    """Extrapolate v(R) = a + b/R + c/R^2 (+ d/R^3) through 3 or 4 points.

    Truncating the chain to a box of radius R perturbs these quantities by an
    error with a smooth expansion in 1/R, so a polynomial fit in 1/R through
    the last few radii removes the leading error terms.
    """
    k = min(4, len(radii))
    R = np.array(radii[-k:], dtype=float)
    V = np.array(vals[-k:], dtype=float)
    if not np.all(np.isfinite(V)):
        return V[-1]
    X = np.vander(1.0 / R, k, increasing=True)
    coef = np.linalg.solve(X, V)
    return coef[0]


def _extrapolation_primary(walk: LatticeWalk, lam: float) -> bool:
    """Whether the truncation error cannot decay below eps within the schedule.

    For lam > 0 the truncation error decays like exp(-kappa R) with
    kappa ~ sqrt(2 lam / sigma^2); when kappa R_max is small the plain
    doubling stop is unreachable and the Richardson stop takes over, exactly
    as at lam = 0 where the error decays only algebraically.
    """
    if lam == 0.0:
        return True
    policy = walk.truncation
    r_max = policy.radius0 * policy.growth ** (policy.max_rounds - 1)
    var = sum(rate * sum(c * c for c in off) for off, rate in walk.kernel.items())
    return math.sqrt(2.0 * lam / var) * r_max < 25.0


def _lattice_bar(walk: LatticeWalk, x, y, taboo, lam):
    """Taboo bar-transform (value, dvalue, atom0) for a lattice walk."""
    policy = walk.truncation
    if lam == 0.0 and walk.is_symmetric_nn_1d:
        bar, atom0 = _censored_nn_bar(walk, x, y, taboo)
        # recurrent 1-d excursions have infinite mean: derivative diverges
        return bar, -math.inf, atom0
    prev = None
    vals, dvals, radii = [], [], []
    extrap_prev = None
    for radius in _radius_schedule(policy):
        bar, dbar, atom0 = _lattice_taboo_once(walk, x, y, taboo, lam, radius)
        vals.append(bar)
        dvals.append(dbar)
        radii.append(radius)
        if lam > 0.0:
            if prev is not None and abs(bar - prev[0]) <= policy.eps:
                return bar, dbar, atom0
            prev = (bar, dbar)
        if len(vals) >= 3:
            extrap = _richardson(radii, vals)
            stable = extrap_prev is not None and abs(extrap - extrap_prev) <= max(
                policy.eps, policy.eps_extrap * abs(extrap)
            )
            # primary stop when plain doubling cannot reach eps; otherwise a
            # stabilized extrapolation still serves as the fallback once the
            # schedule runs out
            if stable and _extrapolation_primary(walk, lam):
                return min(extrap, 1.0), _richardson(radii, dvals), atom0
            extrap_prev = extrap
        else:
            stable = False
    if lam > 0.0 and stable:
        return min(extrap, 1.0), _richardson(radii, dvals), atom0
    raise TruncationNotConverged(
        f"taboo transform did not stabilize within {policy.max_rounds} radius rounds"
    )


def _lattice_green_once(walk, x, y, lam, radius):
    lo, shape = _box_states([x, y], walk.dim, radius)
    A = _build_box_operator(walk, lo, shape, lam)
    b = np.zeros(A.shape[0])
    b[_box_index(y, lo, shape)] = 1.0
    u = _sparse_solve(A, b, _kernel_symmetric(walk))
    return u[_box_index(x, lo, shape)]


def _lattice_green(walk: LatticeWalk, x, y, lam, _probe=False):
    """Green's function by truncation; at lam=0 uses Richardson extrapolation.

    With ``_probe`` the raw radius sequence is returned for recurrence
    detection instead of raising :class:`GreenDivergent`.
    """
    policy = walk.truncation
    vals, radii = [], []
    prev = None
    extrap_prev = None
    for radius in _radius_schedule(policy):
        v = _lattice_green_once(walk, x, y, lam, radius)
        vals.append(v)
        radii.append(radius)
        if _probe and len(vals) >= max(3, min(5, policy.max_rounds)):
            return radii, vals
        if lam > 0.0:
            if prev is not None and abs(v - prev) <= policy.eps and not _probe:
                return v
            prev = v
        else:
            if (prev is not None and v > 1.1 * prev and len(vals) >= 3
                    and not _probe):
                raise GreenDivergent(
                    "Green's function grows under truncation: chain is recurrent"
                )
            prev = v
        if len(vals) >= 3 and not _probe:
            extrap = _richardson(radii, vals)
            stable = extrap_prev is not None and abs(extrap - extrap_prev) <= max(
                policy.eps, policy.eps_extrap * abs(extrap)
            )
            # primary stop when plain doubling cannot reach eps; otherwise a
            # stabilized extrapolation still serves as the fallback once the
            # schedule runs out
            if stable and _extrapolation_primary(walk, lam):
                return extrap
            extrap_prev = extrap
        else:
            stable = False
    if _probe:
        return radii, vals
    if lam > 0.0 and stable:
        return extrap
    raise TruncationNotConverged(
        f"Green's function did not stabilize within {policy.max_rounds} rounds"
    )


# ---------------------------------------------------------------------------
# public operations

_finite_solvers: dict[int, _FiniteLstSolver] = {}


def _solver(chain: FiniteChain) -> _FiniteLstSolver:
    s = _finite_solvers.get(id(chain))
    if s is None:
        s = _FiniteLstSolver(chain)
        _finite_solvers[id(chain)] = s
    return s


_lattice_cache: dict[tuple, tuple] = {}


def _lattice_bar_cached(walk, x, y, taboo, lam):
    key = (id(walk), x, y, taboo, lam)
    hit = _lattice_cache.get(key)
    if hit is None:
        hit = _lattice_bar(walk, x, y, taboo, lam)
        _lattice_cache[key] = hit
    return hit


def bar_hit_lst(model: ChainModel, x, y, taboo=(), lam: float = 0.0) -> TabooLst:
    """Transform of the hitting time of ``y`` after first leaving ``x``.

    The taboo set must not contain ``y``.  ``x`` may lie in the taboo set or
    equal ``y``; the first-jump decomposition handles those cases.
    """
    taboo = tuple(taboo)
    if y in taboo:
        raise ValueError("target state may not belong to the taboo set")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if isinstance(model, FiniteChain):
        solver = _solver(model)
        xi, yi = model.index(x), model.index(y)
        tset = tuple(sorted(model.index(h) for h in taboo))
        bar, dbar, atom0, total = solver.bar(xi, yi, tset, lam)
        return TabooLst(bar, dbar, atom0, total)
    walk = model
    x, y = tuple(x), tuple(y)
    taboo = tuple(sorted(tuple(h) for h in taboo))
    bar, dbar, atom0 = _lattice_bar_cached(walk, x, y, taboo, lam)
    if lam == 0.0:
        total = bar
    else:
        total, _, _ = _lattice_bar_cached(walk, x, y, taboo, 0.0)
    return TabooLst(bar, dbar, atom0, total)


def hit_lst(model: ChainModel, x, y, taboo=(), lam: float = 0.0) -> TabooLst:
    """Transform of the hitting time of ``y`` from ``x`` (initial sojourn included)."""
    bar = bar_hit_lst(model, x, y, taboo, lam)
    qxx = model.qx(x if isinstance(model, FiniteChain) else tuple(x))
    c = -qxx / (lam - qxx)
    dc = qxx / (lam - qxx) ** 2
    if math.isinf(bar.dvalue):
        dval = bar.dvalue
    else:
        dval = dc * bar.value + c * bar.dvalue
    return TabooLst(c * bar.value, dval, 0.0, bar.total)


def green_lst(model: ChainModel, x, y, lam: float) -> float:
    """Laplace transform of the transition probability p(t; x, y).

    ``lam = 0`` is permitted only for transient chains; on recurrent lattice
    walks it raises :class:`GreenDivergent`.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if isinstance(model, FiniteChain):
        if lam == 0.0:
            raise GreenDivergent("finite irreducible chains are recurrent")
        n = len(model.states)
        A = lam * np.eye(n) - model.Q
        sol = np.linalg.solve(A, np.eye(n)[:, model.index(y)])
        return float(sol[model.index(x)])
    return float(_lattice_green(model, tuple(x), tuple(y), lam))


def is_recurrent(model: ChainModel) -> bool:
    """Recurrence of the underlying chain.

    Finite irreducible chains are recurrent.  Lattice walks are probed by the
    growth of the truncated Green's function at lambda = 0: still growing by
    more than 5% between the two largest radii means divergence (recurrent,
    the slowest divergent case grows like log R); growth within 2% means the
    value stabilized (transient, the truncation error decays like 1/R);
    anything in between raises :class:`Undecided`.  An explicit override on
    the walk is honored.
    """
    if isinstance(model, FiniteChain):
        return True
    walk: LatticeWalk = model
    if walk.recurrent_override is not None:
        return bool(walk.recurrent_override)
    if walk.is_symmetric_nn_1d:
        return True
    origin = (0,) * walk.dim
    radii, vals = _lattice_green(walk, origin, origin, 0.0, _probe=True)
    if vals[-1] > 1.05 * vals[-2]:
        return True
    if abs(vals[-1] - vals[-2]) <= 0.02 * abs(vals[-1]):
        return False
    raise Undecided("Green's function neither stabilized nor clearly diverged")
