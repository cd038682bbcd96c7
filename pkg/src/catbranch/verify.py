"""Cross-validation suites: determinant identities and spectral equivalences.

Every suite checks an exact mathematical identity numerically on randomized
finite-chain models: agreement between the small matrix D(lambda) and the
large auxiliary mean matrix H(lambda), the augmented-matrix determinant
factorizations, the equivalence of the three root equations, the resolvent
form of hitting transforms, and the first-passage decomposition. A failure
in any of them means some module computes a quantity wrong.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import FiniteChain, bar_hit_lst, green_lst, hit_lst
from .model import CbpModel, augment_sites, build_model
from .spectral import (
    SUPERCRITICAL,
    _gstar,
    build_D,
    build_D_hat,
    build_D_tilde,
    build_H,
    build_M,
    classify,
    delta_and_adjuncts,
    perron_root,
)

_BAND = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    checked: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def random_finite_model(rng: np.random.Generator, n_catalysts: int,
                        extra_states: int | None = None,
                        supercritical: bool = False) -> CbpModel:
    """Random irreducible finite-chain model with the given catalyst count."""
    if extra_states is None:
        extra_states = int(rng.integers(2, 5))
    ns = n_catalysts + extra_states
    Q = rng.uniform(0.1, 1.0, size=(ns, ns))
    # thin some transitions but keep a full cycle for irreducibility
    Q *= rng.random(size=(ns, ns)) < 0.8
    for i in range(ns):
        Q[i, (i + 1) % ns] = max(Q[i, (i + 1) % ns], 0.2)
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    states = list(range(ns))
    cats = []
    for k in range(n_catalysts):
        probs = rng.dirichlet(np.ones(5))
        law = {v: float(p) for v, p in enumerate(probs) if p > 0}
        if supercritical:
            # push mass to large offspring counts to force rho(D) > 1
            law = {0: 0.1, 4: 0.9}
        cats.append({
            "site": k,
            "alpha": float(rng.uniform(0.15, 0.85)),
            "beta": float(rng.uniform(0.3, 2.5)),
            "law": law,
        })
    return build_model({"states": states, "generator": Q.tolist()}, cats, n_max=4)


def _rel(err, scale):
    return abs(err) / max(1.0, abs(scale))


def check_lemma_sign_agreement(models, lams=(0.0, 0.1, 1.0)) -> CheckResult:
    """rho(D(lambda)) and rho(H(lambda)) fall on the same side of 1.

    Also asserts the sandwich bounds from the same argument: when
    rho(H) >= 1, rho(H) <= rho(D) <= rho(H)^2, mirrored below 1.
    """
    worst = 0.0
    checked = 0
    for model in models:
        for lam in lams:
            rd = perron_root(build_D(model, lam)[0])[0]
            rh = perron_root(build_H(model, lam))[0]
            if abs(rd - 1.0) < _BAND or abs(rh - 1.0) < _BAND:
                continue
            checked += 1
            if (rd - 1.0) * (rh - 1.0) < 0:
                worst = max(worst, abs(rd - 1.0))
                continue
            if rh >= 1.0:
                viol = max(rh - rd, rd - rh * rh)
            else:
                viol = max(rh * rh - rd, rd - rh)
            worst = max(worst, max(0.0, viol))
    return CheckResult("sign agreement and sandwich rho(D) vs rho(H)",
                       checked, worst, 1e-9)


def check_determinant_identities(models, lams=(0.0, 0.35, 1.2)) -> CheckResult:
    """The three determinant identities linking I - H(lambda) and I - D(lambda)."""
    worst = 0.0
    checked = 0
    for model in models:
        n = model.n_catalysts
        M, book = build_M(model)
        for lam in lams:
            D = build_D(model, lam)[0]
            H = build_H(model, lam)
            A = np.eye(n) - D
            B = np.eye(book.L) - H
            worst = max(worst, _rel(np.linalg.det(B) - np.linalg.det(A),
                                    np.linalg.det(A)))
            checked += 1
            for j in range(n):
                for k in range(n):
                    dj = np.linalg.det(np.delete(np.delete(A, j, 0), k, 1)) \
                        if n > 1 else 1.0
                    hj = np.linalg.det(np.delete(np.delete(B, j, 0), k, 1))
                    worst = max(worst, _rel(hj - dj, dj))
                    checked += 1
                    g = _gstar(model.catalysts[j].beta, lam)[0]
                    for i, _ in enumerate(book.K[j]):
                        row = book.L_offset[j] + i
                        lhs = ((-1) ** (row + 1 + k + 1)
                               * np.linalg.det(np.delete(np.delete(B, row, 0),
                                                         k, 1)))
                        rhs = ((-1) ** (j + k)) * M[j, row] * g * dj
                        worst = max(worst, _rel(lhs - rhs, rhs))
                        checked += 1
    return CheckResult("determinant identities I-H vs I-D", checked, worst, 1e-10)


def check_augmented_determinants(models, rng, lams=(0.3, 1.1)) -> CheckResult:
    """Nine determinant factorizations for the pseudo-catalyst augmented matrices."""
    worst = 0.0
    checked = 0
    for model in models:
        chain = model.chain
        free = [s for s in chain.states if s not in model.sites]
        if len(free) < 2:
            continue
        x, y = (free[i] for i in rng.choice(len(free), size=2, replace=False))
        W = model.sites
        Wx = W + (x,)
        n = model.n_catalysts
        mx = augment_sites(model, x=x)
        mxy = augment_sites(model, x=x, y=y)
        rep = classify(model)
        test_lams = list(lams)
        if rep.regime == SUPERCRITICAL:
            test_lams.append(rep.nu)
        for lam in test_lams:
            delta, dprime, C = delta_and_adjuncts(model, lam)
            dx, dxp, Cx = delta_and_adjuncts(mx, lam)
            dxy, dxyp, Cxy = delta_and_adjuncts(mxy, lam)
            Fxx = hit_lst(chain, x, x, W, lam).value
            Fyy_x = hit_lst(chain, y, y, Wx, lam).value
            Fyy = hit_lst(chain, y, y, W, lam).value
            # (1) and (2): determinant factorizations
            worst = max(worst, _rel(dx - delta * (1 - Fxx), delta))
            worst = max(worst, _rel(dxy - delta * (1 - Fxx) * (1 - Fyy_x), delta))
            checked += 2
            if rep.regime == SUPERCRITICAL and lam == rep.nu:
                # (3) and (4): derivative factorizations at the growth rate
                worst = max(worst, _rel(dxp - dprime * (1 - Fxx), dprime))
                worst = max(worst,
                            _rel(dxyp - dprime * (1 - Fxx) * (1 - Fyy_x), dprime))
                checked += 2
            proj = [hit_lst(chain, x, wi,
                            tuple(s for s in W if s != wi), lam).value
                    for wi in W]
            barwx = [bar_hit_lst(chain, wj, x, W, lam).value for wj in W]
            gfac = [(1 - c.alpha) * _gstar(c.beta, lam)[0]
                    for c in model.catalysts]
            for i in range(n):
                for j in range(n):
                    # (5): catalyst-block cofactors
                    worst = max(worst, _rel(Cx[j, i] - C[j, i] * (1 - Fxx), 1.0))
                    checked += 1
            for j in range(n):
                # (6): cofactor against the augmented column
                lhs = Cx[j, n] / (1 - Fxx)
                rhs = sum(proj[i] * C[j, i] for i in range(n))
                worst = max(worst, _rel(lhs - rhs, rhs))
                checked += 1
            for i in range(n):
                # (7): cofactor against the augmented row
                rhs = sum(C[j, i] * gfac[j] * barwx[j] for j in range(n))
                worst = max(worst, _rel(Cx[n, i] - rhs, rhs))
                checked += 1
            # (8): corner minor
            rhs = delta + sum(proj[i] * C[j, i] * gfac[j] * barwx[j]
                              for i in range(n) for j in range(n))
            worst = max(worst, _rel(Cx[n, n] - rhs, rhs))
            checked += 1
            # (9): mixed corner cofactor of the doubly augmented matrix
            lhs = Cxy[n + 1, n] * (1 - Fyy) / ((1 - Fxx) * (1 - Fyy_x))
            Fxy_W = hit_lst(chain, x, y, W, lam).value
            barwy = [bar_hit_lst(chain, wj, y, W, lam).value for wj in W]
            rhs = delta * Fxy_W + sum(proj[i] * C[j, i] * gfac[j] * barwy[j]
                                      for i in range(n) for j in range(n))
            worst = max(worst, _rel(lhs - rhs, rhs))
            checked += 1
    return CheckResult("augmented determinant factorizations", checked, worst, 1e-9)


def _bisect_det(lo_l, hi_l, lo_v, model) -> float:
    for _ in range(200):
        mid = 0.5 * (lo_l + hi_l)
        mv = np.linalg.det(build_D_tilde(model, mid))
        if mv == 0.0 or hi_l - lo_l < 1e-14:
            return float(mid)
        if np.sign(mv) == np.sign(lo_v):
            lo_l = mid
        else:
            hi_l = mid
    return 0.5 * (lo_l + hi_l)


def _topmost_sign_change(lams, model) -> float | None:
    """First sign change of det(D_tilde) scanning the grid top-down."""
    prev_l = lams[0]
    prev_v = np.linalg.det(build_D_tilde(model, prev_l))
    for lam in lams[1:]:
        v = np.linalg.det(build_D_tilde(model, lam))
        if v == 0.0:
            return float(lam)
        if np.sign(v) != np.sign(prev_v):
            return _bisect_det(lam, prev_l, v, model)
        prev_l, prev_v = lam, v
    return None


def _det_dtilde_root(model, hi, grid=96) -> float | None:
    """Largest root of det(D_tilde(lambda)) on (0, hi], grid scan then bisection.

    The scan runs top-down on a geometric grid so that the first sign
    change found brackets the largest root even when it sits many orders
    of magnitude below the upper end.  A pair of nearby roots inside one
    coarse interval leaves the sign unchanged there, so after locating a
    candidate the stretch above it is re-scanned at higher resolution and
    the candidate is promoted whenever a larger root turns up.
    """
    lams = np.geomspace(hi, hi * 1e-8, grid)
    root = _topmost_sign_change(lams, model)
    if root is None:
        return None
    for _ in range(3):
        above = lams[lams > root * (1.0 + 1e-10)]
        if len(above) == 0:
            break
        fine = np.geomspace(above[0], root * (1.0 + 1e-8), 8 * len(above))
        better = _topmost_sign_change(fine, model)
        if better is None or better <= root * (1.0 + 1e-10):
            break
        root = better
    return root


def check_root_equivalence(models) -> CheckResult:
    """The growth rate solves det(D_tilde) = 0; supercritical models only."""
    worst = 0.0
    checked = 0
    for model in models:
        rep = classify(model)
        if rep.regime != SUPERCRITICAL:
            continue
        root = _det_dtilde_root(model, hi=2.0 * rep.nu + 1.0)
        if root is None:
            worst = max(worst, 1.0)
        else:
            worst = max(worst, abs(root - rep.nu))
        checked += 1
    return CheckResult("root of det(D_tilde) equals the growth rate",
                       checked, worst, 1e-8)


def check_resolvent_relations(models, lams=(0.4, 1.7)) -> CheckResult:
    """Hitting transforms via resolvents, and the entrywise D_tilde/D_hat link."""
    worst = 0.0
    checked = 0
    for model in models:
        chain = model.chain
        states = chain.states
        for lam in lams:
            G = {(a, b): green_lst(chain, a, b, lam) for a in states for b in states}
            for a in states:
                for b in states:
                    F = hit_lst(chain, a, b, (), lam).value
                    if a != b:
                        rhs = G[(a, b)] / G[(b, b)]
                    else:
                        rhs = 1.0 - 1.0 / ((lam - chain.q(a, a)) * G[(a, a)])
                    worst = max(worst, abs(F - rhs))
                    checked += 1
            Dt = build_D_tilde(model, lam)
            Dh = build_D_hat(model, lam)
            for i, wi in enumerate(model.sites):
                for j, wj in enumerate(model.sites):
                    worst = max(worst, abs(Dt[i, j] * G[(wj, wj)] - Dh[i, j]))
                    checked += 1
    return CheckResult("resolvent form of hitting transforms", checked, worst, 1e-10)


def check_first_passage_decomposition(models, lams=(0.0, 0.6)) -> CheckResult:
    """F*(i,j) = taboo direct passage plus detours through the other catalysts."""
    worst = 0.0
    checked = 0
    for model in models:
        chain = model.chain
        W = model.sites
        for lam in lams:
            for wi in W:
                for wj in W:
                    lhs = hit_lst(chain, wi, wj, (), lam).value
                    taboo_j = tuple(s for s in W if s != wj)
                    rhs = hit_lst(chain, wi, wj, taboo_j, lam).value
                    for wk in W:
                        if wk == wj:
                            continue
                        taboo_k = tuple(s for s in W if s != wk)
                        rhs += (hit_lst(chain, wi, wk, taboo_k, lam).value
                                * hit_lst(chain, wk, wj, (), lam).value)
                    worst = max(worst, abs(lhs - rhs))
                    checked += 1
    return CheckResult("first-passage taboo decomposition", checked, worst, 1e-10)


def check_augmentation_invariance(models, rng) -> CheckResult:
    """Adding pseudo-catalysts never moves the growth rate."""
    worst = 0.0
    checked = 0
    for model in models:
        rep = classify(model)
        if rep.regime != SUPERCRITICAL:
            continue
        free = [s for s in model.chain.states if s not in model.sites]
        if not free:
            continue
        x = free[int(rng.integers(len(free)))]
        rep_x = classify(augment_sites(model, x=x))
        worst = max(worst, abs(rep_x.nu - rep.nu))
        checked += 1
    return CheckResult("growth rate invariant under site augmentation",
                       checked, worst, 1e-10)


def run_all(seed: int = 20240, n_models: int = 200, max_catalysts: int = 3):
    """Run every suite on a fresh randomized model population."""
    rng = np.random.default_rng(seed)
    models = []
    for _ in range(n_models):
        n = int(rng.integers(1, max_catalysts + 1))
        models.append(random_finite_model(rng, n,
                                          supercritical=bool(rng.random() < 0.4)))
    return [
        check_lemma_sign_agreement(models),
        check_determinant_identities(models),
        check_augmented_determinants(models, rng),
        check_root_equivalence(models),
        check_resolvent_relations(models),
        check_first_passage_decomposition(models),
        check_augmentation_invariance(models, rng),
    ]
