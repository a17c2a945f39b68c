"""Sequential-collapse probabilities versus the diagonal of the decoherence functional.

Draws random families (random Hermitian H, random decompositions, random
mixed state) and records the worst disagreement per dimension.
"""

import argparse
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from conhist.decoherence import collapse_oracle, decoherence_matrix
from conhist.sampling import random_family


@dataclass
class OracleConfig:
    n_families: int = 500
    max_dim: int = 4
    max_times: int = 4
    seed: int = 1


def run(cfg: OracleConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    worst = defaultdict(float)
    counts = defaultdict(int)
    for _ in range(cfg.n_families):
        f = random_family(rng, cfg.max_dim, cfg.max_times)
        diag = decoherence_matrix(f).diagonal
        for lab, p in zip(f.labels, diag):
            worst[f.dim] = max(worst[f.dim], abs(collapse_oracle(f, lab) - p))
            counts[f.dim] += 1
    return {d: (counts[d], worst[d]) for d in sorted(worst)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for k, v in asdict(OracleConfig()).items():
        ap.add_argument(f"--{k.replace('_', '-')}", type=type(v), default=v)
    cfg = OracleConfig(**vars(ap.parse_args()))
    print("dim  histories  max |oracle - d(a,a)|")
    for d, (n, w) in run(cfg).items():
        print(f"{d:3d}  {n:9d}  {w:.2e}")


if __name__ == "__main__":
    main()
