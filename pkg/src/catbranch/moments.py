"""Asymptotic moment constants for the local and total particle numbers.

Depending on the regime, the n-th factorial moments grow like a_n e^{n nu t}
and A_n e^{n nu t} (supercritical), like b_n t^{n-1} and B_n t^{2n-1}
(critical), or vanish locally while the total moments tend to C_n
(subcritical). All constants reduce to determinant minors of I - D(lambda),
the derivative Delta'(lambda), and taboo hitting transforms; the higher
orders follow iterative schemes driven by the branching polynomial h_{n,k}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, isfinite, isinf

import numpy as np

from .chain import bar_hit_lst, hit_lst, is_recurrent
from .errors import MomentOrderMissing, RegimeMismatch
from .model import CbpModel, augment_sites
from .spectral import (
    CRITICAL,
    SUBCRITICAL,
    SUPERCRITICAL,
    SpectralReport,
    _gstar,
    classify,
    delta_and_adjuncts,
)

__all__ = [
    "MomentTable",
    "PositivityFlags",
    "augment_sites",
    "h_nk",
    "local_constants",
    "moment_table",
    "total_constants",
]


@lru_cache(maxsize=1024)
def _delta(model: CbpModel, lam: float):
    return delta_and_adjuncts(model, lam)


def _adj(model, lam, j, i):
    """Signed minor Delta_{j,i}(lambda) of I - D(lambda)."""
    return _delta(model, lam)[2][j, i]


def _compositions(n, r):
    """Ordered compositions of n into exactly r positive parts."""
    if r == 1:
        yield (n,)
        return
    for first in range(1, n - r + 2):
        for rest in _compositions(n - first, r - 1):
            yield (first,) + rest


def h_nk(model: CbpModel, n: int, k: int, z) -> float:
    """Branching polynomial h_{n,k}(z_1, ..., z_{n-1}).

    Multinomial sum over ordered compositions of n into r >= 2 parts,
    weighted by the r-th factorial moment of the offspring law at catalyst
    k divided by r factorial, with prefactor alpha_k.
    """
    if n < 2:
        raise MomentOrderMissing("h_nk is defined for n >= 2")
    cat = model.catalysts[k]
    if len(cat.moments) < n:
        raise MomentOrderMissing(
            f"offspring moments up to order {n} required for catalyst {k}"
        )
    z = list(z)
    total = 0.0
    for r in range(2, n + 1):
        fr = cat.moment(r)
        if fr == 0.0:
            continue
        s = 0.0
        for comp in _compositions(n, r):
            w = factorial(n)
            prod = 1.0
            for part in comp:
                w //= factorial(part)
                prod *= z[part - 1]
            s += w * prod
        total += fr / factorial(r) * s
    return cat.alpha * total


@dataclass(frozen=True)
class PositivityFlags:
    """Structural conditions deciding when the limiting constants are positive."""

    transient: bool
    finite_transit_means: bool
    nondegenerate: bool
    degenerate_normalization: bool  # critical model with infinite Delta'(0)


def positivity_flags(model: CbpModel) -> PositivityFlags:
    transient = not is_recurrent(model.chain)
    sites = model.sites
    finite_means = True
    for wi in sites:
        for wj in sites:
            taboo = tuple(s for s in sites if s != wj)
            b = bar_hit_lst(model.chain, wi, wj, taboo, 0.0)
            if isinf(b.dvalue):
                finite_means = False
    nondeg = any(
        c.alpha > 0 and (c.law is None or dict(c.law) != {1: 1.0})
        and not (c.law is None and c.moments[0] == 1.0
                 and all(m == 0.0 for m in c.moments[1:]))
        for c in model.catalysts
    )
    return PositivityFlags(
        transient=transient,
        finite_transit_means=finite_means,
        nondegenerate=nondeg,
        degenerate_normalization=not finite_means,
    )


def _is_catalyst(model, x):
    return x in model.sites


def _site_index(model, x):
    return model.sites.index(x)


# ---------------------------------------------------------------------------
# supercritical family

@lru_cache(maxsize=4096)
def _a_catalyst(model: CbpModel, nu: float, i: int, y, n: int) -> float:
    """a_n(w_i, y) for catalyst start w_i."""
    sites = model.sites
    if n == 1:
        _, dprime, _ = _delta(model, nu)
        if _is_catalyst(model, y):
            j = _site_index(model, y)
            cj = model.catalysts[j]
            return _adj(model, nu, j, i) / ((nu + cj.beta) * dprime)
        chain = model.chain
        num = 0.0
        for j, cj in enumerate(model.catalysts):
            g = _gstar(cj.beta, nu)[0]
            barv = bar_hit_lst(chain, sites[j], y, sites, nu).value
            num += _adj(model, nu, j, i) * (1.0 - cj.alpha) * g * barv
        qyy = chain.q(y, y)
        Fyy = hit_lst(chain, y, y, sites, nu).value
        return num / ((nu - qyy) * dprime * (1.0 - Fyy))
    lam = n * nu
    delta_n, _, _ = _delta(model, lam)
    out = 0.0
    for k, ck in enumerate(model.catalysts):
        z = [_a_catalyst(model, nu, k, y, r) for r in range(1, n)]
        h = h_nk(model, n, k, z)
        if h != 0.0:
            out += ck.beta * _adj(model, lam, k, i) / ((lam + ck.beta) * delta_n) * h
    return out


def _a_value(model, nu, x, y, n):
    if _is_catalyst(model, x):
        return _a_catalyst(model, nu, _site_index(model, x), y, n)
    sites = model.sites
    out = 0.0
    for i, wi in enumerate(sites):
        taboo = tuple(s for s in sites if s != wi)
        F = hit_lst(model.chain, x, wi, taboo, n * nu).value
        out += F * _a_catalyst(model, nu, i, y, n)
    return out


@lru_cache(maxsize=4096)
def _A_catalyst(model: CbpModel, nu: float, i: int, n: int) -> float:
    if n == 1:
        _, dprime, _ = _delta(model, nu)
        out = 0.0
        for j, cj in enumerate(model.catalysts):
            out += (cj.alpha * cj.beta * (cj.mean - 1.0) * _adj(model, nu, j, i)
                    / (nu * (nu + cj.beta) * dprime))
        return out
    lam = n * nu
    delta_n, _, _ = _delta(model, lam)
    out = 0.0
    for j, cj in enumerate(model.catalysts):
        z = [_A_catalyst(model, nu, j, r) for r in range(1, n)]
        h = h_nk(model, n, j, z)
        if h != 0.0:
            out += cj.beta * _adj(model, lam, j, i) / ((lam + cj.beta) * delta_n) * h
    return out


def _A_value(model, nu, x, n):
    if _is_catalyst(model, x):
        return _A_catalyst(model, nu, _site_index(model, x), n)
    sites = model.sites
    out = 0.0
    for i, wi in enumerate(sites):
        taboo = tuple(s for s in sites if s != wi)
        F = hit_lst(model.chain, x, wi, taboo, n * nu).value
        out += F * _A_catalyst(model, nu, i, n)
    return out


# ---------------------------------------------------------------------------
# critical family

@lru_cache(maxsize=4096)
def _b_catalyst(model: CbpModel, i: int, y, n: int) -> float:
    _, dprime, _ = _delta(model, 0.0)
    if isinf(dprime):
        return 0.0
    sites = model.sites
    if n == 1:
        if _is_catalyst(model, y):
            j = _site_index(model, y)
            return _adj(model, 0.0, j, i) / (model.catalysts[j].beta * dprime)
        chain = model.chain
        num = 0.0
        for j, cj in enumerate(model.catalysts):
            Fjy = hit_lst(chain, sites[j], y, sites, 0.0).total
            num += _adj(model, 0.0, j, i) * (1.0 - cj.alpha) * Fjy
        qyy = chain.q(y, y)
        Fyy = hit_lst(chain, y, y, sites, 0.0).total
        return num / ((-qyy) * dprime * (1.0 - Fyy))
    out = 0.0
    for k, ck in enumerate(model.catalysts):
        f2 = ck.moment(2)
        if f2 == 0.0 or ck.alpha == 0.0:
            continue
        pair = sum(comb(n, r) * _b_catalyst(model, k, y, r)
                   * _b_catalyst(model, k, y, n - r) for r in range(1, n))
        out += (ck.alpha * f2 * _adj(model, 0.0, k, i)
                / (2.0 * (n - 1) * dprime) * pair)
    return out


def _b_value(model, x, y, n):
    if _is_catalyst(model, x):
        return _b_catalyst(model, _site_index(model, x), y, n)
    sites = model.sites
    out = 0.0
    for i, wi in enumerate(sites):
        taboo = tuple(s for s in sites if s != wi)
        F = hit_lst(model.chain, x, wi, taboo, 0.0).total
        out += F * _b_catalyst(model, i, y, n)
    return out


@lru_cache(maxsize=4096)
def _B_catalyst(model: CbpModel, i: int, n: int) -> float:
    flags = positivity_flags(model)
    if not (flags.transient and flags.finite_transit_means):
        return 0.0
    _, dprime, _ = _delta(model, 0.0)
    if n == 1:
        return sum(cj.alpha * (cj.mean - 1.0) * _adj(model, 0.0, j, i) / dprime
                   for j, cj in enumerate(model.catalysts))
    out = 0.0
    for j, cj in enumerate(model.catalysts):
        f2 = cj.moment(2)
        if f2 == 0.0 or cj.alpha == 0.0:
            continue
        pair = sum(comb(n, r) * _B_catalyst(model, j, r)
                   * _B_catalyst(model, j, n - r) for r in range(1, n))
        out += (cj.alpha * f2 * _adj(model, 0.0, j, i)
                / (2.0 * (2 * n - 1) * dprime) * pair)
    return out


def _B_value(model, x, n):
    if _is_catalyst(model, x):
        return _B_catalyst(model, _site_index(model, x), n)
    sites = model.sites
    out = 0.0
    for i, wi in enumerate(sites):
        taboo = tuple(s for s in sites if s != wi)
        F = hit_lst(model.chain, x, wi, taboo, 0.0).total
        out += F * _B_catalyst(model, i, n)
    return out


# ---------------------------------------------------------------------------
# subcritical family

@lru_cache(maxsize=4096)
def _C_catalyst(model: CbpModel, i: int, n: int) -> float:
    delta0, _, _ = _delta(model, 0.0)
    if n == 1:
        return 1.0 + sum(
            cj.alpha * (cj.mean - 1.0) * _adj(model, 0.0, j, i) / delta0
            for j, cj in enumerate(model.catalysts)
        )
    out = 0.0
    for j in range(model.n_catalysts):
        z = [_C_catalyst(model, j, r) for r in range(1, n)]
        h = h_nk(model, n, j, z)
        if h != 0.0:
            out += _adj(model, 0.0, j, i) / delta0 * h
    return out


def _C_value(model, x, n):
    if _is_catalyst(model, x):
        return _C_catalyst(model, _site_index(model, x), n)
    sites = model.sites
    masses = []
    for wi in sites:
        taboo = tuple(s for s in sites if s != wi)
        masses.append(hit_lst(model.chain, x, wi, taboo, 0.0).total)
    out = sum(F * _C_catalyst(model, i, n) for i, F in enumerate(masses))
    if n == 1:
        out += 1.0 - sum(masses)
    return out


# ---------------------------------------------------------------------------
# public API

def local_constants(model: CbpModel, x, y, n: int,
                    report: SpectralReport | None = None) -> float:
    """Leading constant of the n-th local factorial moment m_n(t; x, y).

    Supercritical: a_n(x, y) with m_n ~ a_n e^{n nu t}. Critical: b_n(x, y)
    with m_n ~ b_n t^{n-1}; identically 0 when the transit-time means
    diverge. Subcritical: exact 0 (the local moments vanish and no limiting
    constant exists).
    """
    if n < 1:
        raise MomentOrderMissing("order must be >= 1")
    report = report or classify(model)
    if report.regime == SUPERCRITICAL:
        return _a_value(model, report.nu, x, y, n)
    if report.regime == CRITICAL:
        flags = positivity_flags(model)
        if not flags.finite_transit_means:
            return 0.0
        return _b_value(model, x, y, n)
    return 0.0


def total_constants(model: CbpModel, x, n: int,
                    report: SpectralReport | None = None) -> float:
    """Leading constant of the n-th total factorial moment M_n(t; x).

    Supercritical: A_n(x) with M_n ~ A_n e^{n nu t}. Critical: B_n(x) with
    M_n ~ B_n t^{2n-1}, positive only on transient chains with finite
    transit means. Subcritical: the limit C_n(x), positive iff transient.
    """
    if n < 1:
        raise MomentOrderMissing("order must be >= 1")
    report = report or classify(model)
    if report.regime == SUPERCRITICAL:
        return _A_value(model, report.nu, x, n)
    if report.regime == CRITICAL:
        return _B_value(model, x, n)
    return _C_value(model, x, n)


@dataclass(frozen=True)
class MomentTable:
    """All requested asymptotic constants for one model."""

    regime: str
    nu: float | None
    local: dict = field(default_factory=dict)
    total: dict = field(default_factory=dict)
    flags: PositivityFlags | None = None

    def rows(self):
        """Flat rows (kind, x, y, n, value) for CSV emission."""
        for (x, y, n), v in sorted(self.local.items(), key=lambda kv: repr(kv[0])):
            yield ("local", x, y, n, v)
        for (x, n), v in sorted(self.total.items(), key=lambda kv: repr(kv[0])):
            yield ("total", x, "", n, v)


def moment_table(model: CbpModel, xs, ys, orders,
                 report: SpectralReport | None = None) -> MomentTable:
    """Evaluate local and total constants on a grid of sites and orders."""
    report = report or classify(model)
    flags = positivity_flags(model)
    local = {}
    total = {}
    for n in orders:
        for x in xs:
            for y in ys:
                local[(x, y, n)] = local_constants(model, x, y, n, report)
            total[(x, n)] = total_constants(model, x, n, report)
    return MomentTable(report.regime, report.nu, local, total, flags)
