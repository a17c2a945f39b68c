"""Pre- and post-selected probabilities as the final state moves from flat to pure.

A partially polarized spin (Bloch vector 0.4 z) is asked about S_z once.
rho_f = (1 - s) I/2 + s |phi><phi|, with phi along an axis at polar angle
theta, interpolates between the standard functional (s = 0) and strict
post-selection (s = 1).  The family stays consistent because the initial
state commutes with the question.
"""

import argparse
from dataclasses import asdict, dataclass

import numpy as np

from conhist.decoherence import check_consistency, decoherence_matrix, time_symmetric_decoherence_matrix
from conhist.histories import TemporalSupport, product_family
from conhist.kinematics import DensityOperator, Dynamics, bloch_state, spin_decomposition


@dataclass
class DemoConfig:
    steps: int = 6
    theta: float = 0.6  # polar angle of the post-selection axis, radians


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for k, v in asdict(DemoConfig()).items():
        ap.add_argument(f"--{k}", type=type(v), default=v)
    cfg = DemoConfig(**vars(ap.parse_args()))
    axis = np.array([np.sin(cfg.theta), 0.0, np.cos(cfg.theta)])
    rho = DensityOperator(0.5 * (np.eye(2) + 0.4 * np.diag([1.0, -1.0])))
    base = product_family(TemporalSupport((1.0,)), [spin_decomposition([0, 0, 1])], Dynamics.free(2), rho)
    std = decoherence_matrix(base).diagonal
    print(f"standard: p(+) = {std[0]:.6f}, p(-) = {std[1]:.6f}")
    post = bloch_state(axis).matrix
    print("   s    p(+)      p(-)      consistent")
    for s in np.linspace(0, 1, cfg.steps):
        rho_f = DensityOperator((1 - s) * np.eye(2) / 2 + s * post)
        dm = time_symmetric_decoherence_matrix(base.with_state(final_state=rho_f))
        ok = check_consistency(dm).consistent
        print(f"{s:5.2f}  {dm.diagonal[0]:.6f}  {dm.diagonal[1]:.6f}  {ok}")


if __name__ == "__main__":
    main()
