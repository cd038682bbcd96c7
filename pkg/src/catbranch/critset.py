"""Criticality set in catalyst-mean space.

For fixed motion and branching probabilities, criticality is a surface in
the space of offspring means (m_1, ..., m_N). Because each m_i enters
det(I - D(0)) linearly through the diagonal entry alpha_i m_i, the critical
value of any single mean given the others is a ratio of two determinants,
which also yields the axis bounds M_i and a grid tracer for the surface.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import AlphaZero, DegenerateMinor, NoSolution
from .model import CbpModel
from .spectral import build_D, perron_root, rho_D

_RESIDUAL_TOL = 1e-9
_MINOR_TOL = 1e-12


def _require_alphas(model: CbpModel):
    for k, c in enumerate(model.catalysts):
        if c.alpha == 0.0:
            raise AlphaZero(f"catalyst {k} has alpha = 0; its mean cannot move rho")


def solve_m_i(model: CbpModel, i: int, means=None) -> float:
    """Critical value of m_i with the other offspring means held fixed.

    Writing A0 = I - D(0) evaluated at m_i = 0, the determinant is linear
    in m_i: det(I - D) = det(A0) - alpha_i m_i minor_ii(A0), so the root is
    det(A0) / (alpha_i minor_ii(A0)). The result is accepted only if it is
    nonnegative and re-classification lands on the critical surface.
    """
    _require_alphas(model)
    if means is None:
        means = [c.mean for c in model.catalysts]
    means = list(means)
    means[i] = 0.0
    probe = model.with_means(means)
    D0, _ = build_D(probe, 0.0)
    A0 = np.eye(len(means)) - D0
    rows = [r for r in range(len(means)) if r != i]
    minor = float(np.linalg.det(A0[np.ix_(rows, rows)])) if len(means) > 1 else 1.0
    if abs(minor) < _MINOR_TOL:
        raise DegenerateMinor(f"minor at index {i} is numerically singular")
    alpha = model.catalysts[i].alpha
    m_i = float(np.linalg.det(A0)) / (alpha * minor)
    if -1e-9 < m_i < 0:
        m_i = 0.0
    if m_i < 0:
        raise NoSolution(
            f"critical m_{i + 1} would be negative "
            "(the fixed means already make the process supercritical)"
        )
    means[i] = m_i
    rho = rho_D(model.with_means(means), 0.0)
    if abs(rho - 1.0) > _RESIDUAL_TOL:
        raise NoSolution(f"re-classification residual {abs(rho - 1.0):.3e}")
    return m_i


def axis_bounds(model: CbpModel):
    """Parallelepiped bounds (M_1, ..., M_N): critical m_i with all others 0."""
    n = model.n_catalysts
    return tuple(solve_m_i(model, i, [0.0] * n) for i in range(n))


@dataclass(frozen=True)
class CritSetResult:
    """Traced criticality surface with bookkeeping."""

    axis_bounds: tuple
    points: list = field(default_factory=list)  # (m_1, ..., m_N, residual)
    skipped: list = field(default_factory=list)  # (m_1, ..., m_{N-1}, reason)
    resolution: int = 0


def trace_critset(model: CbpModel, resolution: int = 101) -> CritSetResult:
    """Trace the surface as a graph m_N = g(m_1, ..., m_{N-1}) on a grid.

    The prefix grid is confined to the nested conditional bounds: the range
    of m_i given (m_1, ..., m_{i-1}) is [0, M_i(prefix)] with the suffix
    means set to zero. Cells without a valid solution are recorded in the
    skip list rather than interpolated.
    """
    _require_alphas(model)
    n = model.n_catalysts
    if n < 2:
        raise NoSolution("tracing needs at least two catalysts")
    bounds = axis_bounds(model)
    points = []
    skipped = []

    def expand(prefix):
        depth = len(prefix)
        if depth == n - 1:
            means = list(prefix) + [0.0]
            try:
                m_last = solve_m_i(model, n - 1, means)
            except (NoSolution, DegenerateMinor) as exc:
                skipped.append(tuple(prefix) + (exc.args[0] if exc.args else str(exc),))
                return
            means[n - 1] = m_last
            rho = rho_D(model.with_means(means), 0.0)
            points.append(tuple(means) + (abs(rho - 1.0),))
            return
        # conditional bound for the next coordinate, suffix pinned to zero
        means = list(prefix) + [0.0] * (n - depth)
        try:
            hi = solve_m_i(model, depth, means)
        except (NoSolution, DegenerateMinor) as exc:
            skipped.append(tuple(prefix) + (exc.args[0] if exc.args else str(exc),))
            return
        for v in np.linspace(0.0, hi, resolution):
            expand(prefix + [float(v)])

    expand([])
    points.sort()
    skipped.sort(key=lambda row: row[:-1])
    return CritSetResult(bounds, points, skipped, resolution)


def write_points_csv(result: CritSetResult, path):
    """Emit traced points as CSV with header m_1,...,m_N,residual."""
    n = len(result.axis_bounds)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"m_{i + 1}" for i in range(n)] + ["residual"])
        for row in result.points:
            w.writerow([f"{v:.12g}" for v in row])


def write_skips_csv(result: CritSetResult, path):
    """Emit skipped grid cells with their reason codes."""
    n = len(result.axis_bounds)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"m_{i + 1}" for i in range(n - 1)] + ["reason"])
        for row in result.skipped:
            w.writerow([f"{v:.12g}" for v in row[:-1]] + [row[-1]])
