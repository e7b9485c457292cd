"""Monte Carlo histogram of N(t) next to the series PMF, with a chi-square test.

    python3 scripts/mc_histogram.py --beta 0.7 --t 1 --paths 100000 --seed 42
"""

import argparse
from dataclasses import dataclass

from fracpoisson.analytic import pmf_vector
from fracpoisson.mc import chi_square_gof, empirical_pmf, simulate_paths
from fracpoisson.specfun import ProcessParams


@dataclass(frozen=True)
class HistConfig:
    beta: float = 0.7
    lam: float = 1.0
    t: float = 1.0
    paths: int = 100_000
    seed: int = 42
    workers: int = 1
    rows: int = 15


def main(cfg: HistConfig):
    params = ProcessParams(cfg.beta, cfg.lam)
    emp = empirical_pmf(simulate_paths(cfg.seed, params, cfg.t, cfg.paths, cfg.workers), cfg.t)
    model = pmf_vector(60, cfg.t, params)
    print(" n   empirical    series")
    for n in range(min(cfg.rows, emp.counts.size)):
        print(f"{n:2d}   {emp.frequencies[n]:.6f}   {model.values[n]:.6f}")
    gof = chi_square_gof(emp, model)
    print(f"mean {emp.mean:.5f} +- {emp.mean_stderr:.5f}")
    print(f"chi2 {gof.statistic:.3f} on {gof.dof} dof, p = {gof.p_value:.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.7)
    ap.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    main(HistConfig(a.beta, a.lam, a.t, a.paths, a.seed, a.workers))
