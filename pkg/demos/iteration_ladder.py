"""Iteration counts of the path-following loop on a size ladder.

Runs the basic method (no weight changes) on undirected unit-capacity
graphs and reports the constant C in iterations = C sqrt(m) log m.  It then
runs a few boosted iterations on the same graphs to show the size of the
weight budget the boosting constants demand at this scale.

    python demos/iteration_ladder.py --sizes 64,256,1024
"""

import argparse
import math

import numpy as np

import ipmflow.driver as driver
from ipmflow.driver import Config, IterationLimitError, choose_eta, maxflow
from ipmflow.generators import random_undirected
from ipmflow.trace import Trace



def boosted_budget(g, eta: float, iters: int) -> float:
    """Largest ||w||_1 / 3m over a few boosted iterations."""
    tr = Trace()
    original = driver.run_ipm

    def keep_trace(gp, cfg, eta_, boosted, _tr=None, t_star=None):
        return original(gp, cfg, eta_, boosted, tr, t_star)

    driver.run_ipm = keep_trace
    try:
        maxflow(g, Config(eta=eta, strict_budget=False, max_iters=iters))
    except IterationLimitError:
        pass
    finally:
        driver.run_ipm = original
    return max(r["w_l1"] / (3 * r["m"]) for r in tr.phase("progress"))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,256,1024", help="edge counts seen by the IPM")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'m':>6} {'value':>6} {'iters':>7} {'C':>6} {'eta':>6} {'boosted ||w||/3m':>17}")
    for m in sorted(int(s) for s in args.sizes.split(",")):
        mu = m // 2
        g = random_undirected(rng, max(4, round(2 * math.sqrt(mu))), mu, 1)
        res = maxflow(g, Config(method="basic-ipm"))
        C = res.iterations / (math.sqrt(m) * math.log(m))
        eta = choose_eta(m, 1)
        blow = boosted_budget(g, eta, 10)
        print(f"{m:>6} {res.value:>6} {res.iterations:>7} {C:>6.2f} {eta:>6.3f} {blow:>17.3g}")


if __name__ == "__main__":
    main()
