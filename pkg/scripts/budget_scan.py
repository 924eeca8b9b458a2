"""Compare the accumulated step sum at quench with the closed-form budget.

Scans the half-width a from just above the critical width upward on zero
data. Near the critical width the solution lingers by a near-steady state,
and the accumulated time can exceed the closed-form budget.
"""

import argparse

import numpy as np

from quenchsplit.grid import build_uniform
from quenchsplit.model import ProblemSpec, kawarada, zero_initial
from quenchsplit.splitting import quench_time_upper_bound, run_to_quench


def main() -> None:
    p = argparse.ArgumentParser(description="budget scan")
    p.add_argument("--N", type=int, default=19)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--a", type=float, nargs="+", default=[0.74, 0.75, 0.8, 0.9, 1.0, 1.2, 1.4142135623730951, 2.0])
    args = p.parse_args()
    print(f"{'a':>8} {'status':>20} {'sum tau':>10} {'budget':>10}")
    for a in args.a:
        spec = ProblemSpec(build_uniform(a, args.N), kawarada(), zero_initial(a), args.delta, max_steps=10**7)
        traj = run_to_quench(spec, max_time=200.0, steady_tol=1e-10, strict=False)
        print(f"{a:8.4f} {traj.summary.status:>20} {float(np.sum(traj.taus)):10.4f} {quench_time_upper_bound(spec):10.4f}")


if __name__ == "__main__":
    main()
