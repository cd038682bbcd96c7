"""Command-line front end: config ingestion, subcommands, deterministic output.

Every experiment is described by a single JSON config with sections

* ``chain``: either ``{"states": [...], "generator": [[...]]}`` for a finite
  chain, or ``{"lattice": {"dim": d, "kernel": [[offset, rate], ...],
  "truncation": {...}}}`` for a lattice walk,
* ``catalysts``: list of ``{"site", "alpha", "beta", "moments", "law"}``,
* ``run`` (optional): simulation parameters ``{"start", "horizon",
  "sample_times", "replicates", "seed", "population_cap", "orders"}``,

plus an optional top-level ``n_max``. CSV files are written with 12
significant digits and a fixed row ordering so identical invocations
produce byte-identical output.

Exit status: 0 on success, 1 on validation errors, 2 on numeric
non-convergence. Diagnostics go to stderr as one JSON object per line with
a machine-readable ``code`` field.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import __version__
from .chain import FiniteChain, LatticeWalk
from .critset import axis_bounds, trace_critset, write_points_csv, write_skips_csv
from .errors import CatBranchError, UnknownSite
from .model import load_model
from .moments import moment_table
from .oracle import mean_field, second_moment_ode, total_mean
from .sim import SimConfig, backend_name, estimate_moments, write_estimates_csv
from .spectral import SUPERCRITICAL, classify

_FMT = "%.12g"


def _diag(code: str, message: str) -> None:
    print(json.dumps({"code": code, "message": message}, sort_keys=True),
          file=sys.stderr)


def _load(path: str):
    with open(path) as fh:
        return json.load(fh)


def _parse_site(model, text: str):
    """Interpret a site given on the command line for the model's chain."""
    chain = model.chain
    if isinstance(chain, LatticeWalk):
        try:
            return tuple(int(c) for c in text.split(","))
        except ValueError:
            raise UnknownSite(f"cannot parse lattice site {text!r}")
    for state in chain.states:
        if text == str(state):
            return state
    try:
        value = json.loads(text)
    except ValueError:
        value = text
    if value in chain._index:
        return value
    raise UnknownSite(f"{text!r} is not a state of the chain")


def _fmt_site(site) -> str:
    if isinstance(site, tuple):
        return ",".join(str(c) for c in site)
    return str(site)


def _orders(text: str):
    return tuple(int(n) for n in text.split(","))


# --- subcommands --------------------------------------------------------

def _cmd_classify(args) -> int:
    model = load_model(_load(args.config))
    report = classify(model)
    out = report.as_dict()
    if report.regime == SUPERCRITICAL:
        from .verify import _det_dtilde_root
        out["det_root"] = _det_dtilde_root(model, hi=2.0 * report.nu + 1.0)
    if args.json:
        print(json.dumps(out, sort_keys=True))
        return 0
    print(f"regime: {report.regime}")
    print(f"rho(D(0)): {report.rho:.12g}")
    if report.nu is not None:
        print(f"nu: {report.nu:.12g}")
    if "det_root" in out and out["det_root"] is not None:
        print(f"det-root cross-check: {out['det_root']:.12g}")
    if report.boundary:
        print("note: rho(D(0)) lies inside the critical tolerance band")
    return 0


def _cmd_moments(args) -> int:
    model = load_model(_load(args.config))
    report = classify(model)
    xs = [_parse_site(model, s) for s in args.x]
    ys = [_parse_site(model, s) for s in (args.y or args.x)]
    table = moment_table(model, xs, ys, _orders(args.orders), report)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "x", "y", "order", "value"])
        for kind, x, y, n, v in table.rows():
            w.writerow([kind, _fmt_site(x), _fmt_site(y) if y != "" else "",
                        n, _FMT % v])
    print(f"regime: {table.regime}")
    if table.nu is not None:
        print(f"nu: {table.nu:.12g}")
    print(f"wrote {args.out}")
    return 0


def _cmd_critset(args) -> int:
    model = load_model(_load(args.config))
    bounds = axis_bounds(model)
    print("axis bounds:", " ".join(_FMT % b for b in bounds))
    result = trace_critset(model, resolution=args.grid)
    write_points_csv(result, args.points)
    write_skips_csv(result, args.skips)
    print(f"traced {len(result.points)} points, skipped {len(result.skipped)}")
    print(f"wrote {args.points} and {args.skips}")
    return 0


def _cmd_simulate(args) -> int:
    config = _load(args.config)
    model = load_model(config)
    run = dict(config.get("run", {}))
    for key in ("replicates", "seed", "horizon", "population_cap"):
        value = getattr(args, key)
        if value is not None:
            run[key] = value
    if args.times is not None:
        run["sample_times"] = [float(t) for t in args.times.split(",")]
    if args.start is not None:
        run["start"] = _parse_site(model, args.start)
    elif isinstance(model.chain, LatticeWalk):
        run["start"] = tuple(run["start"])
    orders = _orders(args.orders) if args.orders else tuple(run.get("orders", (1,)))
    sim = SimConfig(
        start=run["start"],
        horizon=float(run.get("horizon", max(run["sample_times"]))),
        sample_times=tuple(run["sample_times"]),
        replicates=int(run.get("replicates", 1000)),
        seed=int(run.get("seed", 0)),
        population_cap=int(run.get("population_cap", 10_000_000)),
    )
    estimates = estimate_moments(model, sim, orders=orders,
                                 workers=args.workers, force_pure=args.pure)
    write_estimates_csv(estimates, args.out)
    print(f"backend: {'python' if args.pure else backend_name()}")
    print(f"replicates: {sim.replicates} (truncated: {estimates[0].truncated})")
    print(f"wrote {args.out}")
    return 0


def _cmd_verify(args) -> int:
    from .verify import run_all

    if args.config is not None:
        # validate the given model up front so schema errors exit with code 1
        load_model(_load(args.config))
    results = run_all(seed=args.seed, n_models=args.models)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failed = failed or not r.passed
        print(f"{status}  {r.name}: checked={r.checked} "
              f"max_err={r.max_error:.3e} tol={r.tolerance:.0e}")
    return 2 if failed else 0


def _cmd_oracle(args) -> int:
    model = load_model(_load(args.config))
    chain = model.chain
    if not isinstance(chain, FiniteChain):
        raise UnknownSite("the ODE oracle needs a finite chain")
    times = [float(t) for t in args.times.split(",")]
    states = chain.states
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "x", "y", "order", "value"])
        for t in times:
            m1 = mean_field(model, t)
            M1 = total_mean(model, t)
            if args.second:
                m2, M2 = second_moment_ode(model, t)
            for i, x in enumerate(states):
                for j, y in enumerate(states):
                    w.writerow([_FMT % t, _fmt_site(x), _fmt_site(y), 1,
                                _FMT % m1[i, j]])
                    if args.second:
                        w.writerow([_FMT % t, _fmt_site(x), _fmt_site(y), 2,
                                    _FMT % m2[i, j]])
                w.writerow([_FMT % t, _fmt_site(x), "", 1, _FMT % M1[i]])
                if args.second:
                    w.writerow([_FMT % t, _fmt_site(x), "", 2, _FMT % M2[i]])
    print(f"wrote {args.out}")
    return 0


# --- entry point --------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="catbranch",
        description="Numerical laboratory for catalytic branching processes.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="regime, Perron root and growth rate")
    c.add_argument("config")
    c.add_argument("--json", action="store_true", help="machine-readable output")
    c.set_defaults(func=_cmd_classify)

    m = sub.add_parser("moments", help="asymptotic moment constants as CSV")
    m.add_argument("config")
    m.add_argument("--x", action="append", required=True,
                   help="start site (repeatable)")
    m.add_argument("--y", action="append",
                   help="observation site (repeatable, defaults to --x)")
    m.add_argument("--orders", default="1", help="comma-separated orders")
    m.add_argument("--out", default="moments.csv")
    m.set_defaults(func=_cmd_moments)

    k = sub.add_parser("critset", help="trace the criticality surface")
    k.add_argument("config")
    k.add_argument("--grid", type=int, default=101, help="points per axis")
    k.add_argument("--points", default="critset_points.csv")
    k.add_argument("--skips", default="critset_skips.csv")
    k.set_defaults(func=_cmd_critset)

    s = sub.add_parser("simulate", help="Monte Carlo moment estimates as CSV")
    s.add_argument("config")
    s.add_argument("--out", default="estimates.csv")
    s.add_argument("--replicates", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--horizon", type=float)
    s.add_argument("--times", help="comma-separated sample times")
    s.add_argument("--start", help="starting site")
    s.add_argument("--orders", help="comma-separated orders")
    s.add_argument("--population-cap", type=int, dest="population_cap")
    s.add_argument("--workers", type=int,
                   help="process count (default: CATBRANCH_WORKERS or CPU count)")
    s.add_argument("--pure", action="store_true",
                   help="force the pure Python kernel")
    s.set_defaults(func=_cmd_simulate)

    v = sub.add_parser("verify", help="run the randomized identity suites")
    v.add_argument("config", nargs="?",
                   help="optional model config validated before the suites")
    v.add_argument("--seed", type=int, default=20240)
    v.add_argument("--models", type=int, default=200)
    v.set_defaults(func=_cmd_verify)

    o = sub.add_parser("oracle", help="exact ODE moment tables as CSV")
    o.add_argument("config")
    o.add_argument("--times", required=True, help="comma-separated times")
    o.add_argument("--second", action="store_true",
                   help="include second factorial moments")
    o.add_argument("--out", default="oracle.csv")
    o.set_defaults(func=_cmd_oracle)
    return p


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CatBranchError as exc:
        _diag(exc.code, str(exc))
        return exc.exit_status
    except FileNotFoundError as exc:
        _diag("FileNotFound", str(exc))
        return 1
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        _diag("BadConfig", f"{type(exc).__name__}: {exc}")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
