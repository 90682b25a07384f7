"""Maximum flow by a weighted-barrier interior-point method.

Path following with electric flows, congestion control through budgeted
energy maximization, and an exact combinatorial finish.
"""

from .central_path import (Congestion, IPMPoint, Weights, barrier_value, congestion,
                           coupling_norm, gaps, resistances, slacks, weighted_norm)
from .combinatorial import dinic_maxflow, edmonds_karp, round_to_integral
from .congestion import (BoostConfig, SmoothedFlowProblem, control_congestion,
                         energy_maximize, eval_g, homogeneous_via_binary_search,
                         solve_smoothed_lp)
from .driver import Config, choose_eta, maxflow, progress
from .electric import (ElectricSolution, LaplacianSolver, build_laplacian, electric_flow,
                       energy, energy_lower_bound, solve_laplacian)
from .graph import (Graph, directed_graph, flow_value, parse_dimacs, precondition,
                    reduce_directed_to_undirected, undirected_graph, validate_flow,
                    write_dimacs)
from .steps import center, center_fully, progress_step
from .trace import Trace
from .weights import compute_weights, perfect_center, reduce_weights

__version__ = "0.1.0"

__all__ = [
    "BoostConfig", "Config", "Congestion", "ElectricSolution", "Graph", "IPMPoint",
    "LaplacianSolver", "SmoothedFlowProblem", "Trace", "Weights", "barrier_value",
    "build_laplacian", "center", "center_fully", "choose_eta", "compute_weights",
    "congestion", "control_congestion", "coupling_norm", "dinic_maxflow", "directed_graph",
    "edmonds_karp", "electric_flow", "energy", "energy_lower_bound", "energy_maximize",
    "eval_g", "flow_value", "gaps", "homogeneous_via_binary_search", "maxflow",
    "parse_dimacs", "perfect_center", "precondition", "progress", "progress_step",
    "reduce_directed_to_undirected", "reduce_weights", "resistances", "round_to_integral",
    "slacks", "solve_laplacian", "solve_smoothed_lp", "undirected_graph", "validate_flow",
    "weighted_norm", "write_dimacs",
]
