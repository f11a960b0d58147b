"""Growing random networks with degree-driven attachment and root finding."""
from .attachment import AttachmentFunction, PhiTable, Regime, classify_regime, kappa, phi, phi_inverse
from .analytics import (
    BudgetBound,
    GeneralM,
    GeneralTree,
    LinearTheorem,
    MalthusianSolution,
    budget_bn,
    budget_bounds,
    malthusian_rate,
    muhat,
    radius_rn,
    tilde_alpha_star,
    yule_mgf,
)
from .ctbp import (
    CtbpTree,
    Time,
    VertexCount,
    collapsed_simulate,
    ctbp_simulate,
    discrete_view,
    martingale_path,
    martingale_samples,
    sample_tn_drift,
    sample_winfty,
)
from .errors import (
    BracketFailure,
    DivergenceDetected,
    DomainError,
    NetarchError,
    RangeError,
    ResourceError,
)
from .experiments import ExperimentConfig, ExperimentRecord, ExperimentResult, derive_seed, run_experiment
from .generator import (
    EvolvingGraph,
    GraphView,
    ImportedGraph,
    export_graph,
    generator_new,
    grow_arrays,
    grow_naive,
    grow_to,
    import_graph,
    make_rng,
    read_graph,
    write_graph,
)
from .rootfind import (
    ConfidenceSet,
    ball,
    bfs_distances,
    degree_topk,
    jordan_scores,
    jordan_topk,
    neighborhood_confidence_set,
    root_rank,
    vmax,
)

__version__ = "0.1.0"
