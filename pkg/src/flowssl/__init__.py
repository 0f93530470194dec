"""Semi-supervised learning on graphs via sparse unit flows.

Labels known on a few nodes are propagated to the rest of the graph by
solving, for each unlabeled node, a small convex flow problem: labeled
nodes act as sources, the query node absorbs a unit in-flow, and an
l1-type penalty controls how far the flow spreads. The out-flows at the
labeled nodes are the prediction weights, and the support of the optimal
flow is a DAG that can be exported and explored.
"""

from .graph import (
    Graph,
    IncidenceSystem,
    Laplacian,
    GraphError,
    build_knn_graph,
    laplacian,
    costs_from_laplacian,
    with_costs,
    with_labels,
    incidence_system,
    add_anchor_nodes,
    to_directed,
)
from .solver import (
    FlowProblem,
    AdmmOptions,
    CholeskyCache,
    FlowSolution,
    SolverError,
    DisconnectedGraphError,
    InfeasibleFlowError,
    solve_exact_lambda0,
    factorize,
    admm_step_x,
    soft_threshold,
    admm_solve,
    admm_solve_directed,
    brute_force_oracle,
)
from .predict import (
    WeightVector,
    PredictionReport,
    DEFAULT_LAMBDA_GRID,
    weights_from_flow,
    predict,
    predict_all,
    weight_entropy,
    regularization_path,
)
from .subgraph import (
    FlowSubgraph,
    extract_support,
    verify_dag,
    export_dot,
    export_json,
    subgraph_from_json,
)
from .baselines import hf_solve, lr_solve, nearest_labeled

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "IncidenceSystem",
    "Laplacian",
    "GraphError",
    "build_knn_graph",
    "laplacian",
    "costs_from_laplacian",
    "with_costs",
    "with_labels",
    "incidence_system",
    "add_anchor_nodes",
    "to_directed",
    "FlowProblem",
    "AdmmOptions",
    "CholeskyCache",
    "FlowSolution",
    "SolverError",
    "DisconnectedGraphError",
    "InfeasibleFlowError",
    "solve_exact_lambda0",
    "factorize",
    "admm_step_x",
    "soft_threshold",
    "admm_solve",
    "admm_solve_directed",
    "brute_force_oracle",
    "WeightVector",
    "PredictionReport",
    "DEFAULT_LAMBDA_GRID",
    "weights_from_flow",
    "predict",
    "predict_all",
    "weight_entropy",
    "regularization_path",
    "FlowSubgraph",
    "extract_support",
    "verify_dag",
    "export_dot",
    "export_json",
    "subgraph_from_json",
    "hf_solve",
    "lr_solve",
    "nearest_labeled",
]
