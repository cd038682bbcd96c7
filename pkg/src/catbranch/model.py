"""Catalytic branching process model object and config ingestion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .chain import ChainModel, FiniteChain, LatticeWalk, validate
from .errors import (
    AlphaOutOfRange,
    MomentLawMismatch,
    MomentOrderMissing,
    SiteAlreadyCatalyst,
    UnknownSite,
)

_LAW_MOMENT_TOL = 1e-10


def factorial_moments(law: dict[int, float], n_max: int) -> list[float]:
    """Factorial moments E[xi (xi-1) ... (xi-r+1)] for r = 1..n_max."""
    out = []
    for r in range(1, n_max + 1):
        m = 0.0
        for k, p in law.items():
            fall = 1.0
            for i in range(r):
                fall *= k - i
        # falling factorial is zero for k < r
            if k >= r:
                m += p * fall
        out.append(m)
    return out


@dataclass(frozen=True, eq=False)
class Catalyst:
    """One catalyst site with its branching parameters."""

    site: object
    alpha: float
    beta: float
    moments: tuple[float, ...]  # factorial moments of the offspring law, order 1..n_max
    law: tuple[tuple[int, float], ...] | None = None  # sampleable offspring law

    @property
    def mean(self) -> float:
        return self.moments[0]

    def moment(self, r: int) -> float:
        if r < 1 or r > len(self.moments):
            raise MomentOrderMissing(
                f"offspring factorial moment of order {r} not supplied"
            )
        return self.moments[r - 1]


@dataclass(frozen=True, eq=False)
class CbpModel:
    """Chain plus catalysts: the single object all analyses consume."""

    chain: ChainModel
    catalysts: tuple[Catalyst, ...]
    n_max: int

    @property
    def n_catalysts(self) -> int:
        return len(self.catalysts)

    @property
    def sites(self) -> tuple:
        return tuple(c.site for c in self.catalysts)

    def with_means(self, means) -> "CbpModel":
        """Copy of the model with offspring means replaced (orders >= 2 kept)."""
        cats = tuple(
            replace(c, moments=(float(m),) + c.moments[1:], law=None)
            for c, m in zip(self.catalysts, means)
        )
        return CbpModel(self.chain, cats, self.n_max)


def _check_site(chain: ChainModel, site):
    if isinstance(chain, FiniteChain):
        if site not in chain._index:
            raise UnknownSite(f"catalyst site {site!r} is not a chain state")
        return site
    if isinstance(chain, LatticeWalk):
        try:
            site = tuple(int(c) for c in site)
        except TypeError:
            raise UnknownSite(f"lattice site {site!r} must be a coordinate tuple")
        if len(site) != chain.dim:
            raise UnknownSite(f"lattice site {site!r} has wrong dimension")
        return site
    raise UnknownSite(f"unsupported chain kind for site {site!r}")


def make_catalyst(chain, site, alpha, beta, n_max, moments=None, law=None) -> Catalyst:
    site = _check_site(chain, site)
    alpha = float(alpha)
    beta = float(beta)
    if not (0.0 <= alpha < 1.0):
        raise AlphaOutOfRange(f"alpha={alpha} outside [0, 1)")
    if beta <= 0:
        raise AlphaOutOfRange(f"beta={beta} must be positive")
    if law is not None:
        law = {int(k): float(p) for k, p in dict(law).items()}
        if any(p < 0 for p in law.values()) or abs(sum(law.values()) - 1.0) > 1e-12:
            raise MomentLawMismatch("offspring law is not a probability vector")
        law_moms = factorial_moments(law, n_max)
        if moments is None:
            moments = law_moms
        else:
            moments = [float(m) for m in moments]
            if len(moments) < n_max:
                raise MomentOrderMissing(
                    f"moments up to order {n_max} required, got {len(moments)}"
                )
            for r, (a, b) in enumerate(zip(moments, law_moms), start=1):
                if abs(a - b) > _LAW_MOMENT_TOL * max(1.0, abs(b)):
                    raise MomentLawMismatch(
                        f"moment of order {r} ({a}) disagrees with the law ({b})"
                    )
        law = tuple(sorted(law.items()))
    else:
        if moments is None:
            raise MomentOrderMissing("either moments or an offspring law is required")
        moments = [float(m) for m in moments]
        if len(moments) < n_max:
            raise MomentOrderMissing(
                f"moments up to order {n_max} required, got {len(moments)}"
            )
    if not math.isfinite(moments[0]) or moments[0] < 0:
        raise MomentLawMismatch("offspring mean must be finite and nonnegative")
    return Catalyst(site, alpha, beta, tuple(moments), law)


def build_model(chain, catalysts, n_max: int = 1) -> CbpModel:
    """Assemble and validate a :class:`CbpModel` from parts."""
    chain = validate(chain)
    cats = []
    seen = set()
    for spec in catalysts:
        if isinstance(spec, Catalyst):
            spec = dict(site=spec.site, alpha=spec.alpha, beta=spec.beta,
                        moments=spec.moments, law=dict(spec.law) if spec.law else None)
        cat = make_catalyst(chain, spec["site"], spec["alpha"], spec["beta"],
                            n_max, spec.get("moments"), spec.get("law"))
        if cat.site in seen:
            raise UnknownSite(f"duplicate catalyst site {cat.site!r}")
        seen.add(cat.site)
        cats.append(cat)
    if not cats:
        raise UnknownSite("at least one catalyst is required")
    return CbpModel(chain, tuple(cats), n_max)


def load_model(config) -> CbpModel:
    """Build a validated model from a config document (dict, JSON text or path)."""
    if isinstance(config, (str, bytes)):
        text = config
        if isinstance(config, str) and not config.lstrip().startswith("{"):
            with open(config) as fh:
                text = fh.read()
        config = json.loads(text)
    chain_cfg = config["chain"]
    n_max = int(config.get("n_max", 1))
    return build_model(chain_cfg, config["catalysts"], n_max)


def to_config(model: CbpModel) -> dict:
    """Serialize a model to a reloadable config document."""
    if isinstance(model.chain, FiniteChain):
        chain_cfg = {
            "states": list(model.chain.states),
            "generator": model.chain.Q.tolist(),
        }
    else:
        walk = model.chain
        chain_cfg = {
            "lattice": {
                "dim": walk.dim,
                "kernel": [[list(off), rate] for off, rate in sorted(walk.kernel.items())],
                "truncation": {
                    "radius0": walk.truncation.radius0,
                    "growth": walk.truncation.growth,
                    "eps": walk.truncation.eps,
                    "max_rounds": walk.truncation.max_rounds,
                    "eps_extrap": walk.truncation.eps_extrap,
                },
            }
        }
        if walk.recurrent_override is not None:
            chain_cfg["lattice"]["recurrent"] = walk.recurrent_override
    cats = []
    for c in model.catalysts:
        entry = {
            "site": list(c.site) if isinstance(model.chain, LatticeWalk) else c.site,
            "alpha": c.alpha,
            "beta": c.beta,
            "moments": list(c.moments),
        }
        if c.law is not None:
            entry["law"] = {str(k): p for k, p in c.law}
        cats.append(entry)
    return {"chain": chain_cfg, "catalysts": cats, "n_max": model.n_max}


def augment_sites(model: CbpModel, x=None, y=None) -> CbpModel:
    """Extend the catalyst set with pseudo-catalysts at ``x`` and/or ``y``.

    A pseudo-catalyst has alpha = 0 and zero offspring moments, with sojourn
    rate equal to the chain's exit rate at the site, so the particle dynamics
    are unchanged.
    """
    extra = [s for s in (x, y) if s is not None]
    if len(extra) == 2 and extra[0] == extra[1]:
        raise SiteAlreadyCatalyst("x and y must differ")
    cats = list(model.catalysts)
    for site in extra:
        site = _check_site(model.chain, site)
        if site in model.sites:
            raise SiteAlreadyCatalyst(f"{site!r} is already a catalyst")
        beta = -model.chain.qx(site)
        cats.append(Catalyst(site, 0.0, beta, (0.0,) * model.n_max,
                             law=((0, 1.0),)))
    return CbpModel(model.chain, tuple(cats), model.n_max)
