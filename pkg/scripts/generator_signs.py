"""Sign pattern and size of the generator's gains from above (k > n).

These entries play the role of fragmentation coefficients in the cluster
picture; a physical reading needs them non-negative. The script only
measures, it asserts nothing.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from fracpoisson.cluster import embed_fpp_generator
from fracpoisson.odegen import generator_matrix
from fracpoisson.specfun import ProcessParams


@dataclass(frozen=True)
class SignConfig:
    betas: tuple = (0.3, 0.5, 0.7, 0.9, 1.0)
    sizes: tuple = (20, 40, 80)


def main(cfg: SignConfig):
    print("beta  N   positive negative zero   max|A|      b_sym_defect  loss_mismatch")
    for beta in cfg.betas:
        for size in cfg.sizes:
            gen = generator_matrix(size, ProcessParams(beta, 1.0))
            pat = gen.sign_pattern()
            rep = embed_fpp_generator(gen, n_states=10)
            print(
                f"{beta:<5} {size:<3} {pat['positive']:>8} {pat['negative']:>8} {pat['zero']:>5}"
                f"   {np.abs(gen.entries).max():.3e}   {rep.symmetry_defect:.3e}     "
                f"{np.abs(rep.loss_mismatch).max():.3e}"
            )


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80])
    args = ap.parse_args()
    main(SignConfig(sizes=tuple(args.sizes)))
