"""Independent ground-truth generators for testing the analytic modules.

Everything here is derived straight from the particle dynamics: the expected
local occupation numbers satisfy a linear ODE whose generator modifies the
chain's rows at catalyst sites, and second factorial moments satisfy the same
linear system driven by squared first moments. None of this shares code with
the spectral or moment-constant machinery, which is the point: the two routes
must agree without a common implementation to hide a shared mistake.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .chain import FiniteChain
from .errors import StiffnessFailure, ValidationError
from .model import CbpModel


def _require_finite(model: CbpModel) -> FiniteChain:
    if not isinstance(model.chain, FiniteChain):
        raise ValidationError("oracle computations need a finite-state chain")
    return model.chain


@lru_cache(maxsize=128)
def mean_generator(model: CbpModel) -> np.ndarray:
    """Generator of the first-moment flow d/dt m1 = A m1.

    Rows at non-catalyst states are the chain generator's rows. At a
    catalyst the sojourn clock runs at rate beta; branching (probability
    alpha) multiplies the local count by the offspring mean, otherwise the
    particle jumps with the chain's jump distribution.
    """
    chain = _require_finite(model)
    A = np.array(chain.Q, dtype=float)
    for cat in model.catalysts:
        k = chain.index(cat.site)
        qkk = chain.Q[k, k]
        jump = -chain.Q[k, :] / qkk  # jump distribution off the diagonal
        A[k, :] = cat.beta * (1.0 - cat.alpha) * jump
        A[k, k] = cat.beta * (cat.alpha * cat.mean - 1.0)
    return A


def mean_field(model: CbpModel, t: float) -> np.ndarray:
    """Matrix of first factorial moments m1(t; x, y), rows x, columns y."""
    if t < 0:
        raise ValidationError("time must be nonnegative")
    return expm(t * mean_generator(model))


def total_mean(model: CbpModel, t: float) -> np.ndarray:
    """Vector of expected total population sizes M1(t; x)."""
    return mean_field(model, t).sum(axis=1)


def second_moment_ode(model: CbpModel, t: float, rtol: float = 1e-10):
    """Second factorial moments (m2(t; x, y) matrix, M2(t; x) vector).

    Both satisfy d/dt u = A u + s(t) with the first-moment generator A and
    a source concentrated on catalyst rows: branching at w_k contributes
    beta_k alpha_k f''_k(1) times the squared first moment there.
    """
    chain = _require_finite(model)
    A = mean_generator(model)
    ns = len(chain.states)
    cat_idx = np.array([chain.index(c.site) for c in model.catalysts])
    weights = np.array([c.beta * c.alpha * c.moment(2) for c in model.catalysts])

    def rhs(s, u):
        m2 = u[: ns * ns].reshape(ns, ns)
        M2 = u[ns * ns:]
        m1 = expm(s * A)
        dm2 = A @ m2
        dM2 = A @ M2
        dm2[cat_idx, :] += weights[:, None] * m1[cat_idx, :] ** 2
        dM2[cat_idx] += weights * m1[cat_idx, :].sum(axis=1) ** 2
        return np.concatenate([dm2.ravel(), dM2])

    u0 = np.zeros(ns * ns + ns)
    sol = solve_ivp(rhs, (0.0, t), u0, method="LSODA", rtol=rtol, atol=1e-12,
                    dense_output=False)
    if not sol.success:
        raise StiffnessFailure(f"second-moment integration failed: {sol.message}")
    u = sol.y[:, -1]
    return u[: ns * ns].reshape(ns, ns), u[ns * ns:]


def compositions(n: int, min_parts: int = 1):
    """All ordered compositions of n into positive parts, grouped by length.

    Returns a dict {r: [tuples summing to n with r parts]} for r >= min_parts.
    """
    if n < 1 or n > 12:
        raise ValidationError("composition enumeration supported for 1 <= n <= 12")
    out: dict[int, list[tuple[int, ...]]] = {}

    def rec(remaining, parts):
        if remaining == 0:
            out.setdefault(len(parts), []).append(tuple(parts))
            return
        for p in range(1, remaining + 1):
            rec(remaining - p, parts + [p])

    rec(n, [])
    return {r: v for r, v in out.items() if r >= min_parts}


def h_nk_bruteforce(model: CbpModel, n: int, k: int, z) -> float:
    """Direct evaluation of the branching source polynomial h_{n,k}.

    Sums alpha_k f^(r)_k(1)/r! times the multinomial-weighted products of
    the arguments over every ordered composition of n with r >= 2 parts.
    """
    from math import factorial

    cat = model.catalysts[k]
    z = list(z)
    total = 0.0
    for r, comps in compositions(n, min_parts=2).items():
        coef = cat.moment(r) / factorial(r)
        for comp in comps:
            w = factorial(n)
            prod = 1.0
            for part in comp:
                w //= factorial(part)
                prod *= z[part - 1]
            total += coef * w * prod
    return cat.alpha * total
