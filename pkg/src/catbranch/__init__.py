"""Numerical laboratory for catalytic branching processes with finitely many catalysts."""

from .chain import (
    FiniteChain,
    LatticeWalk,
    TabooLst,
    TruncationPolicy,
    bar_hit_lst,
    green_lst,
    hit_lst,
    is_recurrent,
)
from .errors import CatBranchError, NumericError, ValidationError
from .model import CbpModel, Catalyst, build_model, load_model, to_config

__version__ = "0.1.0"

__all__ = [
    "FiniteChain",
    "LatticeWalk",
    "TabooLst",
    "TruncationPolicy",
    "bar_hit_lst",
    "green_lst",
    "hit_lst",
    "is_recurrent",
    "CatBranchError",
    "NumericError",
    "ValidationError",
    "CbpModel",
    "Catalyst",
    "build_model",
    "load_model",
    "to_config",
]
