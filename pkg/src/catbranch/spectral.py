"""Spectral machinery: moment matrices, Perron roots, classification, Malthusian parameter.

The central object is the matrix D(lambda) whose Perron root at lambda = 0
classifies the process and whose root of rho(D(nu)) = 1 defines the growth
rate nu. The auxiliary age-dependent branching process contributes the mean
matrix M, its transform H(lambda), and the extended matrix M_hat with an
absorbing final type for escaping particles. The matrices D_tilde and D_hat
restate the root equation through untabooed hitting transforms and resolvent
kernels and exist for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .chain import bar_hit_lst, green_lst, hit_lst
from .errors import BracketNotFound, NoConvergence, NotIrreducible
from .model import CbpModel

_T_MASS_EPS = 1e-12

SUPERCRITICAL = "supercritical"
CRITICAL = "critical"
SUBCRITICAL = "subcritical"


def _gstar(beta: float, lam: float) -> tuple[float, float]:
    """Sojourn-time LST beta/(lam+beta) and its lambda-derivative."""
    v = beta / (lam + beta)
    return v, -beta / (lam + beta) ** 2


@lru_cache(maxsize=512)
def _bar_table(model: CbpModel, lam: float):
    """Taboo transforms bar[i][j] = _{W_j}Fbar*_{w_i,w_j}(lam) for all catalyst pairs."""
    sites = model.sites
    table = []
    for wi in sites:
        row = []
        for wj in sites:
            taboo = tuple(s for s in sites if s != wj)
            row.append(bar_hit_lst(model.chain, wi, wj, taboo, lam))
        table.append(row)
    return table


def build_D(model: CbpModel, lam: float = 0.0):
    """Matrix D(lambda) and its elementwise lambda-derivative.

    Entries combine the branching contribution alpha_i m_i G*_i(lambda) on
    the diagonal with motion terms (1 - alpha_i) G*_i(lambda) times the
    taboo hitting transform into each catalyst.
    """
    n = model.n_catalysts
    bars = _bar_table(model, float(lam))
    D = np.zeros((n, n))
    dD = np.zeros((n, n))
    for i, ci in enumerate(model.catalysts):
        g, dg = _gstar(ci.beta, lam)
        for j in range(n):
            b = bars[i][j]
            D[i, j] = (1.0 - ci.alpha) * g * b.value
            dD[i, j] = (1.0 - ci.alpha) * (dg * b.value + g * b.dvalue)
            if i == j:
                D[i, j] += ci.alpha * ci.mean * g
                dD[i, j] += ci.alpha * ci.mean * dg
    return D, dD


@dataclass(frozen=True)
class TypeBook:
    """Bookkeeping for the auxiliary process types.

    K[j] lists the catalysts reachable from w_j with positive travel-time
    mass; type L(j)+i tracks particles in transit from w_j toward the i-th
    element of K[j].
    """

    K: tuple[tuple[int, ...], ...]
    L_offset: tuple[int, ...]
    L: int


@lru_cache(maxsize=512)
def _type_book(model: CbpModel) -> TypeBook:
    bars = _bar_table(model, 0.0)
    n = model.n_catalysts
    K = []
    for j in range(n):
        K.append(tuple(k for k in range(n)
                       if bars[j][k].total - bars[j][k].atom0 > _T_MASS_EPS))
    offsets = []
    acc = n
    for j in range(n):
        offsets.append(acc)
        acc += len(K[j])
    return TypeBook(tuple(K), tuple(offsets), acc)


def build_M(model: CbpModel):
    """Mean matrix of the auxiliary age-dependent process, with its type book."""
    M, book = _mh_matrix(model, 0.0)
    return M, book


def build_H(model: CbpModel, lam: float):
    """Transform matrix H(lambda) with entries G*_k(lambda) m_{k,l}; H(0) = M."""
    H, _ = _mh_matrix(model, float(lam))
    return H


def _mh_matrix(model: CbpModel, lam: float):
    book = _type_book(model)
    bars0 = _bar_table(model, 0.0)
    bars = bars0 if lam == 0.0 else _bar_table(model, lam)
    n = model.n_catalysts
    L = book.L
    M = np.zeros((L, L))
    for j, cj in enumerate(model.catalysts):
        g = _gstar(cj.beta, lam)[0] if lam != 0.0 else 1.0
        # catalyst rows: instantaneous jumps plus the branching diagonal
        for l in range(n):
            M[j, l] = (1.0 - cj.alpha) * bars0[j][l].atom0 * g
        M[j, j] += cj.alpha * cj.mean * g
        # transit-type columns seeded from row j
        for i, k in enumerate(book.K[j]):
            M[j, book.L_offset[j] + i] = (
                (1.0 - cj.alpha) * (bars0[j][k].total - bars0[j][k].atom0) * g
            )
        # transit-type rows: deterministic delivery to catalyst k
        for i, k in enumerate(book.K[j]):
            row = book.L_offset[j] + i
            if lam == 0.0:
                gval = 1.0
            else:
                b0 = bars0[j][k]
                bl = bars[j][k]
                gval = (bl.value - bl.atom0) / (b0.total - b0.atom0)
            M[row, k] = gval
    return M, book


def build_M_hat(model: CbpModel):
    """Extended mean matrix with an absorbing final type for escaping mass."""
    M, book = build_M(model)
    bars0 = _bar_table(model, 0.0)
    n = model.n_catalysts
    L = book.L
    Mh = np.zeros((L + 1, L + 1))
    Mh[:L, :L] = M
    for j, cj in enumerate(model.catalysts):
        reach = sum(bars0[j][k].total for k in range(n))
        Mh[j, L] = (1.0 - cj.alpha) * max(0.0, 1.0 - reach)
    Mh[L, L] = 1.0
    return Mh, book


def build_D_tilde(model: CbpModel, lam: float):
    """Root-equation matrix in terms of untabooed hitting transforms."""
    n = model.n_catalysts
    sites = model.sites
    Dt = np.zeros((n, n))
    for i, ci in enumerate(model.catalysts):
        g = _gstar(ci.beta, lam)[0]
        qii = model.chain.q(sites[i], sites[i])
        coef = ci.alpha * ci.mean * g - 1.0 + (1.0 - ci.alpha) * g * (lam - qii) / (-qii)
        for j in range(n):
            F = hit_lst(model.chain, sites[i], sites[j], (), lam).value
            Dt[i, j] = coef * F
            if i == j:
                Dt[i, j] += (ci.alpha * ci.mean * g - 1.0) * (1.0 - F)
    return Dt


def build_D_hat(model: CbpModel, lam: float):
    """Root-equation matrix in terms of resolvent kernels G_lambda."""
    n = model.n_catalysts
    sites = model.sites
    Dh = np.zeros((n, n))
    for i, ci in enumerate(model.catalysts):
        g = _gstar(ci.beta, lam)[0]
        qii = model.chain.q(sites[i], sites[i])
        coef = ci.alpha * ci.mean * g - 1.0 + (1.0 - ci.alpha) * g * (lam - qii) / (-qii)
        for j in range(n):
            Dh[i, j] = coef * green_lst(model.chain, sites[i], sites[j], lam)
            if i == j:
                Dh[i, j] += (1.0 - ci.alpha) / qii * g
    return Dh


def perron_root(A, tol: float = 1e-12, max_iter: int = 500000):
    """Perron root with left and right eigenvectors by power iteration.

    Iterates on A + I, whose Perron root is rho(A) + 1 with the same
    eigenvectors; the shift makes the iteration converge even when the
    support graph of A is periodic.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or n == 0:
        raise NotIrreducible("perron_root expects a nonempty square matrix")
    if np.any(A < 0):
        raise NotIrreducible("matrix has negative entries")
    ncomp, _ = connected_components(csr_matrix(A > 0), directed=True,
                                    connection="strong")
    if ncomp != 1:
        raise NotIrreducible("support graph is not strongly connected")
    B = A + np.eye(n)
    v = np.full(n, 1.0 / n)
    u = np.full(n, 1.0 / n)
    rho = 0.0
    for _ in range(max_iter):
        v_new = B @ v
        u_new = B.T @ u
        v_new /= v_new.sum()
        u_new /= u_new.sum()
        rho = float(u_new @ A @ v_new / (u_new @ v_new))
        res_r = np.max(np.abs(A @ v_new - rho * v_new))
        res_l = np.max(np.abs(A.T @ u_new - rho * u_new))
        v, u = v_new, u_new
        if max(res_r, res_l) <= tol * max(1.0, abs(rho)):
            return rho, u, v
    raise NoConvergence(
        f"power iteration did not reach residual {tol} in {max_iter} steps"
    )


def rho_D(model: CbpModel, lam: float) -> float:
    return perron_root(build_D(model, lam)[0])[0]


@dataclass(frozen=True)
class SpectralReport:
    """Classification summary for one model."""

    rho: float
    regime: str
    nu: float | None
    tol_band: float
    boundary: bool

    def as_dict(self) -> dict:
        return {
            "rho": self.rho,
            "regime": self.regime,
            "nu": self.nu,
            "tol_band": self.tol_band,
            "boundary": self.boundary,
        }


def solve_malthusian(model: CbpModel, tol: float = 1e-12) -> float:
    """Unique positive root of rho(D(lambda)) = 1 for a supercritical model.

    rho(D(lambda)) is strictly decreasing in lambda and tends to 0, so a
    doubling scan always brackets the root; plain bisection then converges.
    """
    lo, f_lo = 0.0, rho_D(model, 0.0) - 1.0
    if f_lo <= 0:
        raise BracketNotFound("rho(D(0)) <= 1: no positive growth rate")
    hi = 1.0
    f_hi = rho_D(model, hi) - 1.0
    for _ in range(80):
        if f_hi < 0:
            break
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = rho_D(model, hi) - 1.0
    else:
        raise BracketNotFound("could not bracket the growth-rate root")
    # Illinois variant of bracketing bisection: the interval always contains
    # the root, but the secant midpoint converges superlinearly
    side = 0
    for _ in range(200):
        mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not lo < mid < hi:
            mid = 0.5 * (lo + hi)
        f = rho_D(model, mid) - 1.0
        if abs(f) <= tol or hi - lo <= 1e-15 * max(1.0, mid):
            return mid
        if f > 0:
            lo, f_lo = mid, f
            if side == 1:
                f_hi *= 0.5
            side = 1
        else:
            hi, f_hi = mid, f
            if side == -1:
                f_lo *= 0.5
            side = -1
    return 0.5 * (hi + lo)


@lru_cache(maxsize=512)
def classify(model: CbpModel, tol_band: float = 1e-9,
             with_rate: bool = True) -> SpectralReport:
    """Regime of the process from the Perron root of D(0), with nu if it exists.

    ``with_rate=False`` skips the growth-rate solve (nu reported as None for
    supercritical models); useful when only the regime is needed on lattice
    chains, where every evaluation of D(lam) costs a truncated linear solve.
    """
    rho = rho_D(model, 0.0)
    boundary = abs(rho - 1.0) < tol_band
    if rho > 1.0 + tol_band:
        nu = solve_malthusian(model) if with_rate else None
        return SpectralReport(rho, SUPERCRITICAL, nu, tol_band, boundary)
    if rho < 1.0 - tol_band:
        return SpectralReport(rho, SUBCRITICAL, None, tol_band, boundary)
    return SpectralReport(rho, CRITICAL, 0.0, tol_band, boundary)


def _cofactors(A):
    """Signed cofactor values c[i, j] = (-1)^(i+j) det(A with row i, col j removed)."""
    n = A.shape[0]
    C = np.empty((n, n))
    for i in range(n):
        rows = [r for r in range(n) if r != i]
        for j in range(n):
            cols = [c for c in range(n) if c != j]
            minor = A[np.ix_(rows, cols)]
            C[i, j] = (-1) ** (i + j) * (np.linalg.det(minor) if n > 1 else 1.0)
    return C


def delta_and_adjuncts(model: CbpModel, lam: float):
    """Determinant Delta(lambda) = det(I - D(lambda)), its derivative, and all minors.

    Returns (delta, delta_prime, adj) where adj[i, j] is the signed (i, j)
    cofactor of I - D(lambda). The derivative follows Jacobi's formula
    d det(A)/dlambda = tr(adj(A) dA/dlambda) with dA/dlambda = -D'(lambda).
    For a 1x1 model the single cofactor is identically 1.
    """
    D, dD = build_D(model, lam)
    A = np.eye(D.shape[0]) - D
    C = _cofactors(A)
    delta = float(np.linalg.det(A))
    dprime = 0.0
    for i in range(D.shape[0]):
        for j in range(D.shape[0]):
            d = dD[i, j]
            if d == 0.0 or C[i, j] == 0.0:
                continue
            if math.isinf(d):
                # a diverging transform derivative dominates every finite term
                return delta, math.inf if -d * C[i, j] > 0 else -math.inf, C
            dprime -= C[i, j] * d
    return delta, float(dprime), C
