"""How boosting resistances flattens the congestion of an electric flow.

A small graph with a thin bridge draws a large share of the unit electric
flow.  ``control_congestion`` buys extra resistance on the congested
edges under a weight budget; the printout compares the congestion profile
and the electric energy before and after, for a few values of eta.

    python demos/congestion_control.py
"""

import argparse

import numpy as np

from ipmflow.central_path import IPMPoint, congestion, weighted_norm
from ipmflow.congestion import control_congestion, eval_g
from ipmflow.graph import precondition, undirected_graph


def bottleneck_graph():
    edges = [(0, 2, 4), (2, 1, 4), (0, 3, 4), (3, 1, 4), (0, 4, 1), (4, 1, 1), (0, 1, 1)]
    return precondition(undirected_graph(5, edges, 0, 1))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--etas", default="0,0.05,0.125")
    args = ap.parse_args()
    g = bottleneck_graph()
    point = IPMPoint.initial(g)
    base = congestion(g, point)
    rho2 = weighted_norm(base, point.w, 2)
    print(f"m={g.m}; before boosting: energy {base.energy:.4f}, "
          f"||rho||_inf / ||rho||_2 = {weighted_norm(base, point.w, np.inf) / rho2:.4f}")

    for eta in (float(x) for x in args.etas.split(",")):
        res = control_congestion(g, point, eta)
        rep = res.report
        w_new = point.w + res.w_prime
        after = res.congestion
        ratio = weighted_norm(after, w_new, np.inf) / weighted_norm(after, w_new, 2)
        print(f"\neta={eta}: W={rep.W:.4g} after {rep.doublings} doublings, p={rep.p}")
        print(f"  energy {rep.energy_before:.4f} -> {rep.energy_after:.4f}")
        print(f"  ||rho||_inf / ||rho||_2 = {ratio:.4g} (limit m^-eta = {g.m ** -eta:.4g})")
        print(f"  item ratios: {rep.item3_ratio:.3g}, {rep.item4_ratio:.3g}; "
              f"weight added {res.w_prime.l1:.4g} on top of {point.w.l1:.4g}")

    print("\nlog-energy gain g(W) and g(W)/W on the base resistances (p = 2):")
    for W, gain in eval_g(g, base.r, g.chi, [0.1, 1.0, 10.0, 100.0, 1000.0], 2):
        print(f"  W={W:>8.1f}  g={gain:.5f}  g/W={gain / W:.3e}")


if __name__ == "__main__":
    main()
