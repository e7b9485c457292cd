"""Command-line front end: ``fracpoisson {pmf,generator,validate,simulate,cluster}``.

Every command writes one table, either CSV (``#`` metadata lines, a header
row, floats with 17 significant digits) or JSON (``meta``, ``columns``,
``rows``). Output carries the full configuration and the package version
and nothing run-dependent, so identical invocations give identical bytes.

Exit codes: 0 success, 1 validation failure, 2 usage or domain error,
3 numerical precision or integration failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .analytic import pmf, pmf_vector
from .cluster import (
    birth_death_system,
    cluster_rhs,
    constant_system,
    embed_fpp_generator,
    integrate_cluster,
    linear_cluster_rhs,
)
from .errors import (
    ContractError,
    DomainError,
    FracPoissonError,
    IntegrationError,
    NumericOverflowError,
    PrecisionError,
)
from .mc import chi_square_gof, empirical_pmf, simulate_paths
from .odegen import evolve, generator_matrix, integrate_adaptive
from .specfun import ProcessParams

log = logging.getLogger("fracpoisson")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_BETAS = (0.5, 0.7, 0.9, 1.0)
DEFAULT_T_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
MC_P_THRESHOLD = 1e-3


@dataclass(frozen=True)
class RunConfig:
    command: str
    betas: tuple = (1.0,)
    lam: float = 1.0
    trunc: int = 80
    t_grid: tuple = (1.0,)
    tau_grid: tuple = ()
    n_max: int = 10
    tol: float = 1e-6
    paths: int = 0
    seed: int = 42
    fmt: str = "csv"
    out: str | None = None
    with_mc: bool = False
    family: str = "fpp"
    coeffs: dict = field(default_factory=dict)
    mode: str = "histogram"
    workers: int = 1

    @property
    def params(self) -> ProcessParams:
        return ProcessParams(self.betas[0], self.lam)

    def meta(self) -> dict:
        cfg = asdict(self)
        cfg.pop("out")
        cfg.pop("fmt")
        cfg.pop("workers")  # results do not depend on it
        return {"command": self.command, "config": cfg, "version": __version__}


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# output


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _json_cell(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "meta": table.meta,
            "columns": table.columns,
            "rows": [[_json_cell(v) for v in row] for row in table.rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# fracpoisson {__version__}\n")
    for key in sorted(table.meta):
        buf.write(f"# {key}: {json.dumps(table.meta[key], sort_keys=True)}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(table: Table, cfg: RunConfig) -> None:
    text = render(table, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_pmf(cfg: RunConfig) -> Table:
    """Series probabilities ``P(n, t)`` for ``n <= n_max`` at each ``t``."""
    params = cfg.params
    table = Table(["t", "n", "P_series", "normalization_defect", "tail_bound"], meta=cfg.meta())
    for t in cfg.t_grid:
        vec = pmf_vector(cfg.n_max + 1, t, params)
        for n, p in enumerate(vec.values):
            table.rows.append([float(t), n, float(p), vec.normalization_defect, vec.tail_bound])
    return table


def cmd_generator(cfg: RunConfig) -> Table:
    """All entries of the truncated generator, then one column-sum row per column."""
    gen = generator_matrix(cfg.n_max, cfg.params)
    table = Table(["record", "n", "k", "value", "column_complete"], meta=cfg.meta())
    for n in range(gen.size):
        for k in range(gen.size):
            table.rows.append(["A", n, k, float(gen.entries[n, k]), bool(gen.column_complete[k])])
    for k, s in enumerate(gen.column_sums()):
        table.rows.append(["column_sum", "", k, float(s), bool(gen.column_complete[k])])
    return table


def cmd_validate(cfg: RunConfig) -> tuple[Table, bool, str]:
    """Series against the generator ODE (and optionally Monte Carlo) on a grid."""
    columns = ["beta", "t", "tau", "max_discrepancy", "worst_n", "mass_defect", "ode_pass"]
    if cfg.with_mc:
        columns += ["mc_p_value", "mc_pass"]
    table = Table(columns, meta=cfg.meta())
    n_check = min(cfg.n_max, cfg.trunc)
    worst = (-1.0, "")
    all_pass = True
    for beta in cfg.betas:
        params = ProcessParams(beta, cfg.lam)
        gen = generator_matrix(cfg.trunc, params)
        taus = [t**beta for t in cfg.t_grid]
        traj = evolve(gen, max(taus), grid=taus)
        index = {float(x): i for i, x in enumerate(traj.tau_grid)}
        hist_paths = None
        if cfg.with_mc:
            hist_paths = simulate_paths(cfg.seed, params, max(cfg.t_grid), cfg.paths, cfg.workers)
        for t, tau in zip(cfg.t_grid, taus):
            state = traj.states[index[float(tau)]]
            diffs = [abs(state[n] - pmf(n, t, params)) for n in range(n_check)]
            n_bad = int(np.argmax(diffs))
            disc = float(diffs[n_bad])
            ok = disc <= cfg.tol
            row = [beta, float(t), float(tau), disc, n_bad, float(abs(state.sum() - 1.0)), ok]
            if disc > worst[0]:
                worst = (disc, f"beta={beta} t={t} n={n_bad}: |ODE - series| = {disc:.3e}")
            if cfg.with_mc:
                emp = empirical_pmf(hist_paths, t)
                gof = chi_square_gof(emp, pmf_vector(cfg.trunc, t, params))
                mc_ok = gof.p_value > MC_P_THRESHOLD
                row += [gof.p_value, mc_ok]
                if not mc_ok:
                    worst = (math.inf, f"beta={beta} t={t}: chi-square p = {gof.p_value:.3e}")
                ok = ok and mc_ok
            all_pass = all_pass and ok
            table.rows.append(row)
    return table, all_pass, worst[1]


def cmd_simulate(cfg: RunConfig) -> Table:
    """Monte Carlo histograms at each observation time, or raw arrival times."""
    params = cfg.params
    horizon = max(cfg.t_grid)
    paths = simulate_paths(cfg.seed, params, horizon, cfg.paths, cfg.workers)
    if cfg.mode == "paths":
        table = Table(["path", "index", "arrival_time"], meta=cfg.meta())
        for i, p in enumerate(paths):
            for j, a in enumerate(p.arrival_times):
                table.rows.append([i, j, float(a)])
        return table
    table = Table(["t", "n", "count", "frequency"], meta=cfg.meta())
    for t in cfg.t_grid:
        emp = empirical_pmf(paths, t)
        for n, c in enumerate(emp.counts):
            table.rows.append([float(t), n, int(c), float(c) / emp.total])
    return table


def _cluster_system(cfg: RunConfig):
    c = cfg.coeffs
    size = cfg.trunc
    if cfg.family == "constant":
        return constant_system(size, c.get("a", 1.0), c.get("b", 1.0), c.get("z", 1.0))
    if cfg.family == "zero":
        return constant_system(size, 0.0, 0.0, c.get("z", 1.0), c=np.full(size, c.get("c", 0.1)))
    if cfg.family == "birth-death":
        return birth_death_system(
            size, np.full(size + 1, c.get("a", 1.0)), np.full(size + 1, c.get("b", 1.0)), c.get("z", 1.0)
        )
    raise DomainError(f"unknown cluster family {cfg.family!r}")


def cmd_cluster(cfg: RunConfig) -> Table:
    """Cluster trajectory ``(tau, n, c_n)`` plus the applicable consistency rows."""
    table = Table(["record", "tau", "n", "value"], meta=cfg.meta())
    taus = sorted(set(float(x) for x in cfg.tau_grid))
    if not taus or taus[0] < 0.0:
        raise DomainError("cluster runs need a non-negative --tau-grid")
    if cfg.family == "fpp":
        gen = generator_matrix(cfg.trunc, cfg.params)
        report = embed_fpp_generator(gen)
        above = report.above
        c0 = np.zeros(cfg.trunc)
        c0[0] = 1.0  # cluster 1 holds the probability of count 0
        positive = [t for t in taus if t > 0.0]
        states, _ = integrate_adaptive(
            lambda _t, c: report.rhs(c, above), c0, positive, rtol=1e-10, atol=1e-10
        )
        states = dict(zip(positive, states))
        states[0.0] = c0
        extra = [["embedding_residual", "", "", report.residual]]
    else:
        sys_ = _cluster_system(cfg)
        out = integrate_cluster(sys_, [0.0] + [t for t in taus if t > 0.0])
        states = dict(zip([0.0] + [t for t in taus if t > 0.0], out))
        extra = []
        if sys_.is_linear:
            agreement = float(np.abs(cluster_rhs(sys_) - linear_cluster_rhs(sys_)).max())
            extra.append(["linear_agreement", "", "", agreement])
    for tau in taus:
        for n, v in enumerate(states[tau], start=1):
            table.rows.append(["state", tau, n, float(v)])
    table.rows.extend(extra)
    return table


# --------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracpoisson", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"fracpoisson {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, beta_default, t_default, multi_beta=False):
        if multi_beta:
            p.add_argument("--beta", type=float, nargs="+", default=list(beta_default))
        else:
            p.add_argument("--beta", type=float, default=beta_default[0])
        p.add_argument("--lambda", dest="lam", type=float, default=1.0)
        p.add_argument("--t", "--t-grid", dest="t_grid", type=_float_list, default=t_default)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None)

    p = sub.add_parser("pmf", help="series probabilities")
    common(p, (0.5,), (1.0,))
    p.add_argument("--n-max", type=_positive_int, default=10)

    p = sub.add_parser("generator", help="truncated generator matrix")
    common(p, (0.5,), (1.0,))
    p.add_argument("--n", "--n-max", dest="n_max", type=_positive_int, default=10)

    p = sub.add_parser("validate", help="series vs ODE (vs Monte Carlo) cross-check")
    common(p, DEFAULT_BETAS, DEFAULT_T_GRID, multi_beta=True)
    p.add_argument("--trunc", type=_positive_int, default=80)
    p.add_argument("--n-max", type=_positive_int, default=30, help="check counts n < n-max")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--with-mc", action="store_true")
    p.add_argument("--paths", type=_positive_int, default=100000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("simulate", help="Monte Carlo renewal paths")
    common(p, (0.5,), (1.0,))
    p.add_argument("--paths", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--mode", choices=("histogram", "paths"), default="histogram")
    p.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("cluster", help="cluster kinetics trajectory")
    common(p, (1.0,), (1.0,))
    p.add_argument("--family", choices=("fpp", "constant", "birth-death", "zero"), default="fpp")
    p.add_argument("--trunc", "--n", dest="trunc", type=_positive_int, default=20)
    p.add_argument("--tau-grid", type=_float_list, default=(0.0, 0.5, 1.0))
    p.add_argument("--a", type=float, default=1.0, help="coagulation coefficient")
    p.add_argument("--b", type=float, default=1.0, help="fragmentation coefficient")
    p.add_argument("--z", type=float, default=1.0, help="reservoir concentration")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    betas = tuple(ns.beta) if isinstance(ns.beta, (list, tuple)) else (ns.beta,)
    for b in betas:
        ProcessParams(b, ns.lam)  # re-check domain at parse time
    t_grid = tuple(ns.t_grid)
    if not t_grid or any(not t >= 0.0 for t in t_grid):
        raise DomainError("times must be non-negative")
    kw = dict(command=ns.command, betas=betas, lam=ns.lam, t_grid=t_grid, fmt=ns.fmt, out=ns.out)
    for name in ("n_max", "trunc", "tol", "paths", "seed", "with_mc", "mode", "workers", "tau_grid", "family"):
        if hasattr(ns, name):
            kw[name] = tuple(getattr(ns, name)) if name == "tau_grid" else getattr(ns, name)
    if ns.command == "cluster":
        kw["coeffs"] = {"a": ns.a, "b": ns.b, "z": ns.z}
    if ns.command == "validate" and kw["n_max"] > kw["trunc"]:
        raise ContractError(f"--n-max {kw['n_max']} exceeds --trunc {kw['trunc']}")
    if (ns.command == "simulate" or kw.get("with_mc")) and kw["paths"] < 1:
        raise DomainError("--paths must be at least 1")
    return RunConfig(**kw)


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    name = "fracpoisson"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("fracpoisson.") and mod != __name__:
            name = mod
        tb = tb.tb_next
    return name


def _configure_logging() -> None:
    level = os.environ.get("FRACPOISSON_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(cfg: RunConfig) -> int:
    log.info("running %s with %s", cfg.command, cfg)
    if cfg.command == "validate":
        table, ok, worst = cmd_validate(cfg)
        _emit(table, cfg)
        if not ok:
            print(f"validation failed; worst offender: {worst}", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK
    handlers = {"pmf": cmd_pmf, "generator": cmd_generator, "simulate": cmd_simulate, "cluster": cmd_cluster}
    _emit(handlers[cfg.command](cfg), cfg)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        return run(config_from_args(ns))
    except (DomainError, ContractError) as exc:
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrecisionError, NumericOverflowError, IntegrationError) as exc:
        print(f"numerical failure [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FracPoissonError as exc:
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
