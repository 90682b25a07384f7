"""Recompute the reference values in ``data/frozen.json``.

Run from the repository root with ``python tests/freeze_oracles.py``.  Only
the oracles in ``oracles.py`` are used, never the solver under test.
"""

import json
from pathlib import Path

import numpy as np

from oracles import (chi, electric_dense, energy_max_bruteforce, fixture_graph,
                     fixture_resistances, linf_smoothed_cvxpy, smoothed_oracle)

OUT = Path(__file__).with_name("data") / "frozen.json"

ELECTRIC_SEEDS = range(6)
SMOOTHED_CASES = [(seed, P, W, form) for seed in range(3) for P in (4, 6)
                  for W, form in ((0.5, "p-power"), (3.0, "homogeneous"), (40.0, "homogeneous"))]
ENERGY_MAX_CASES = [(seed, W, p) for seed in range(4) for W, p in ((0.3, 2), (2.0, 2), (5.0, 3))]
MINIMAX_CASES = [(seed, W) for seed in range(4) for W in (0.5, 4.0)]


def main() -> None:
    data: dict = {"electric": [], "smoothed": [], "energy_max": [], "minimax": []}
    for seed in ELECTRIC_SEEDS:
        g = fixture_graph(seed, n=10, extra=8)
        r = fixture_resistances(seed, g.m)
        fhat, phi, en = electric_dense(g, r, chi(g))
        data["electric"].append({"seed": seed, "energy": en, "fhat": fhat.tolist(),
                                 "phi": (phi - phi.mean()).tolist()})
    for seed, P, W, form in SMOOTHED_CASES:
        g = fixture_graph(seed, n=8, extra=6)
        r = fixture_resistances(seed, g.m)
        val, _ = smoothed_oracle(g, r, 1.0, P, W, form)
        data["smoothed"].append({"seed": seed, "P": P, "W": W, "form": form, "value": val})
    for seed, W, p in ENERGY_MAX_CASES:
        g = fixture_graph(seed, n=7, extra=5)
        r = fixture_resistances(seed, g.m)
        q = p / (p - 1.0)
        val = energy_max_bruteforce(g, r, chi(g), W, q, starts=4)
        data["energy_max"].append({"seed": seed, "W": W, "p": p, "value": val})
    for seed, W in MINIMAX_CASES:
        g = fixture_graph(seed, n=7, extra=5)
        r = fixture_resistances(seed, g.m)
        data["minimax"].append({
            "seed": seed, "W": W,
            "linf_value": linf_smoothed_cvxpy(g, r, W),
            "max_energy_l1": energy_max_bruteforce(g, r, chi(g), W, 1.0, starts=4),
        })
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
