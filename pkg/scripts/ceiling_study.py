"""Single-shot ceiling vs memory-based tracking as N_t grows.

Prints the simulated single-shot SNR with optimal pilots next to its
upper bound and the correlation ceiling, and the block-9 SNR of the
memory-based schemes, for rho=20 dB, T=4, a=0.9.
"""
import argparse
import dataclasses
import math

import numpy as np

from fddtraining.channel import exponential_correlation
from fddtraining.estimation import snr_ceiling_bound_exp, snr_upper_bound_ss
from fddtraining.simulator import SimConfig, run
from fddtraining.strategies import StrategyKind


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-tx", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--memory", action="store_true", help="also run OL/CL schemes with memory")
    p.add_argument("--workers", type=int)
    return p.parse_args()


def main():
    args = parse_args()
    t, a, rho = 4, 0.9, 100.0
    base = SimConfig(t_len=t, rho=rho, a=a, iterations=args.iterations, blocks=10)
    ceiling = 10 * math.log10(snr_ceiling_bound_exp(t, a))
    print(f"ceiling (any N_t): {ceiling:.2f} dB")
    print("n_tx  cl-ss-full  bound  perfect-csi" + ("  ol-mem  cl-mem-mse  cl-mem-snr" if args.memory else ""))
    for n in args.n_tx:
        cfg = dataclasses.replace(base, n_tx=n, strategy=StrategyKind.CL_SS_FULL)
        ss = np.mean([m.mean_gamma for m in run(cfg, workers=args.workers)])
        bound = 10 * math.log10(snr_upper_bound_ss(exponential_correlation(n, a), t, rho))
        line = f"{n:4d}  {10 * math.log10(ss):10.2f}  {bound:5.2f}  {10 * math.log10(n):11.2f}"
        if args.memory:
            for kind in (StrategyKind.OL_MEM, StrategyKind.CL_MEM_MSE, StrategyKind.CL_MEM_SNR):
                m = run(dataclasses.replace(cfg, strategy=kind), workers=args.workers)[-1]
                line += f"  {m.gamma_db:6.2f}"
        print(line, flush=True)


if __name__ == "__main__":
    main()
