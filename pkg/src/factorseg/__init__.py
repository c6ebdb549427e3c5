"""Change point detection and network estimation for positive multivariate
time series via seeded non-negative matrix factorization."""

from .data import (
    AtlasTable,
    NetworkExport,
    SimulatedDataset,
    SimulationSpec,
    export_network_json,
    load_adjacency_csv,
    load_atlas,
    load_matrix,
    rescale,
    save_adjacency_csv,
    save_matrix,
    simulate_dataset,
)
from .detect import (
    Candidate,
    CandidateSet,
    ChangePointReport,
    ChangePointRow,
    DetectionConfig,
    LossDistributions,
    SegmentBoundaries,
    bh_adjust,
    binary_search_candidate,
    detect_candidates,
    detect_cps,
    grid_search_candidate,
    refit_and_permute,
    split_delta_loss,
    stat_test,
)
from .errors import (
    AtlasMismatchError,
    ConformanceError,
    DataError,
    DegenerateSegmentError,
    FactorsegError,
    ParameterError,
    RangeError,
    RankError,
    RescaleError,
    SingularReconstructionError,
)
from .matrix import TimeSeriesMatrix, ensure_matrix
from .network import (
    AdjacencyMatrix,
    ConsensusMatrix,
    adjacency_from_clustering,
    adjacency_from_threshold,
    consensus_matrix,
    est_net,
    segments_between,
)
from .nmf import (
    NmfConfig,
    NmfFit,
    OptRankResult,
    cluster_assign,
    kld_loss,
    nmf_fit_best,
    nmf_fit_single,
    opt_rank,
    opt_rank_search,
    permute_matrix,
)

__version__ = "0.1.0"
