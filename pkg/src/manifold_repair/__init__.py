"""Manifold embeddings of incomplete data via increase-only metric repair.

Distances are estimated from the coordinates two points have in common,
raised into a metric, and embedded with Isomap.
"""

from importlib.metadata import PackageNotFoundError, version

from ._config import RNG_ALGORITHM, MaskConfig, RepairConfig, RunConfig
from ._embedding import (
    Embedding,
    GeodesicMatrix,
    NeighborGraph,
    Neighborhood,
    classical_mds,
    embed_dimensions,
    epsilon_graph,
    geodesic_distances,
    geodesics_to_train,
    isomap,
    isomap_with_geodesics,
    knn_graph,
    largest_component,
    out_of_sample,
)
from ._evaluation import (
    AlignmentResult,
    accuracy,
    evaluate_embeddings,
    knn_classify,
    neighborhood_preservation,
    procrustes_align,
    relative_error,
)
from ._exceptions import (
    DegenerateReference,
    EmptyComponent,
    FixpointNotReached,
    FormatError,
    InfeasibleParameters,
    ManifoldRepairError,
    ShapeMismatch,
)
from ._masked import (
    Dissimilarity,
    MaskedDataset,
    masked_cross_distances,
    masked_euclidean,
    overlap_counts,
    zero_overlap_pairs,
)
from ._pipeline import (
    Diagnostics,
    PipelineEvents,
    PipelineResult,
    embed_plain,
    mr_missing,
    repair_corrupted,
)
from ._repair import (
    RepairDelta,
    RepairEvents,
    Violation,
    ViolationReport,
    check_metric,
    iomr_fixed_pass,
    repair_to_fixpoint,
)
from ._synthetic import (
    ManifoldKind,
    ManifoldSpec,
    Stream,
    corrupt_distances_gaussian,
    generate,
    mask_bernoulli,
    mask_uniform_fraction,
    rng_for,
    swiss_roll,
)
from ._theory import (
    MonteCarloEvents,
    MonteCarloResult,
    TheoryParams,
    chi_squared_tail_bound,
    hoeffding_tail,
    monte_carlo_bound_check,
    optimal_gamma,
    sample_masked_sq_distance,
    sample_masked_sq_distances,
    theorem_bound,
    wilson_half_width,
)

try:
    __version__ = version("manifold-repair")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "RNG_ALGORITHM",
    "AlignmentResult",
    "DegenerateReference",
    "Diagnostics",
    "Dissimilarity",
    "Embedding",
    "EmptyComponent",
    "FixpointNotReached",
    "FormatError",
    "GeodesicMatrix",
    "InfeasibleParameters",
    "ManifoldKind",
    "ManifoldRepairError",
    "ManifoldSpec",
    "MaskConfig",
    "MaskedDataset",
    "MonteCarloEvents",
    "MonteCarloResult",
    "NeighborGraph",
    "Neighborhood",
    "PipelineEvents",
    "PipelineResult",
    "RepairConfig",
    "RepairDelta",
    "RepairEvents",
    "RunConfig",
    "ShapeMismatch",
    "Stream",
    "TheoryParams",
    "Violation",
    "ViolationReport",
    "__version__",
    "accuracy",
    "check_metric",
    "chi_squared_tail_bound",
    "classical_mds",
    "corrupt_distances_gaussian",
    "embed_dimensions",
    "embed_plain",
    "epsilon_graph",
    "evaluate_embeddings",
    "generate",
    "geodesic_distances",
    "geodesics_to_train",
    "hoeffding_tail",
    "iomr_fixed_pass",
    "isomap",
    "isomap_with_geodesics",
    "knn_classify",
    "knn_graph",
    "largest_component",
    "mask_bernoulli",
    "mask_uniform_fraction",
    "masked_cross_distances",
    "masked_euclidean",
    "monte_carlo_bound_check",
    "mr_missing",
    "neighborhood_preservation",
    "optimal_gamma",
    "out_of_sample",
    "overlap_counts",
    "procrustes_align",
    "relative_error",
    "repair_corrupted",
    "repair_to_fixpoint",
    "rng_for",
    "sample_masked_sq_distance",
    "sample_masked_sq_distances",
    "swiss_roll",
    "theorem_bound",
    "wilson_half_width",
    "zero_overlap_pairs",
]
