"""Co-evolving opinion/weight network simulator and experiment tooling."""

from .model import (
    NetworkState,
    SimParams,
    euler_step,
    homophily_kernel,
    init_network,
    local_average,
    novelty_kernel,
    run_simulation,
)
from .graph import (
    MEASURES,
    OutcomeVector,
    Partition,
    UndirectedWeightedGraph,
    community_average_states,
    louvain,
    modularity,
    outcome_vector,
    symmetrize,
)
from .heatmap import heatmap_stem, render_heatmap, write_heatmap_outputs
from .seeds import LOUVAIN_STREAM, SIM_STREAM, derive_seed, rng_for
from .surrogate import (
    Dataset,
    HeatmapGrid,
    SurrogateModel,
    TrainingConfig,
    build_dataset,
    evaluate_grid,
    loss_and_grads,
    predict,
    train,
)
from .sweep import (
    AggregateRow,
    RecordSink,
    RunRecord,
    SweepSpec,
    SweepSummary,
    aggregate,
    build_grid,
    execute_sweep,
    load_aggregate_csv,
    run_one,
    write_aggregate_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "Dataset",
    "HeatmapGrid",
    "LOUVAIN_STREAM",
    "MEASURES",
    "NetworkState",
    "OutcomeVector",
    "Partition",
    "RecordSink",
    "RunRecord",
    "SIM_STREAM",
    "SimParams",
    "SurrogateModel",
    "SweepSpec",
    "SweepSummary",
    "TrainingConfig",
    "UndirectedWeightedGraph",
    "aggregate",
    "build_dataset",
    "build_grid",
    "evaluate_grid",
    "execute_sweep",
    "heatmap_stem",
    "load_aggregate_csv",
    "loss_and_grads",
    "predict",
    "render_heatmap",
    "run_one",
    "train",
    "write_aggregate_csv",
    "write_heatmap_outputs",
    "community_average_states",
    "derive_seed",
    "euler_step",
    "homophily_kernel",
    "init_network",
    "local_average",
    "louvain",
    "modularity",
    "novelty_kernel",
    "outcome_vector",
    "rng_for",
    "run_simulation",
    "symmetrize",
    "__version__",
]
