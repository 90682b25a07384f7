"""Solve a random instance with the interior point method, then audit its trace.

Walks through the whole pipeline on one seeded directed graph: the exact
answer from Dinic, the path-following run, a few trace records, and the
invariant table the ``audit`` subcommand prints.

    python demos/solve_and_audit.py --n 20 --m 80 --U 4 --seed 3
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from ipmflow import cli
from ipmflow.combinatorial import dinic_maxflow
from ipmflow.driver import Config, maxflow
from ipmflow.generators import random_directed


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--m", type=int, default=80)
    ap.add_argument("--U", type=int, default=4)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    g = random_directed(np.random.default_rng(args.seed), args.n, args.m, args.U)
    _, exact = dinic_maxflow(g)
    print(f"graph: n={g.n} m={g.m} U={int(g.U)}; Dinic value {exact}")

    res = maxflow(g, Config(t_star=exact, audit=True))
    print(f"IPM value {res.value} after {res.iterations} iterations "
          f"(eta {res.eta}, boosted {res.boosted}); fractional value {res.ipm_value:.4f}")
    for label, value in res.trace.notes:
        if label in ("eta_fallback", "final_F_t_cert"):
            print(f"  note {label}: {value}")

    progress = res.trace.phase("progress")
    m = progress[0]["m"]
    print(f"\nIPM graph has m={m} edges after lifting and preconditioning")
    print(f"{'iter':>6} {'t':>10} {'F_t cert':>10} {'delta':>10} {'rho2^2':>10} {'coupling':>10}")
    for rec in progress[:: max(1, len(progress) // 8)]:
        print(f"{rec['iter']:>6} {rec['t']:>10.3f} {rec['F_t_cert']:>10.3f} {rec['delta']:>10.3g} "
              f"{rec['rho2'] ** 2:>10.4g} {rec['coupling']:>10.2e}")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "run.jsonl"
        res.trace.write(path)
        print(f"\ntrace: {len(res.trace)} records; audit says:")
        code = cli.main(["audit", str(path)])
    print(f"audit exit code {code}")


if __name__ == "__main__":
    main()
