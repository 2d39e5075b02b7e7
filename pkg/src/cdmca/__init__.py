"""Cross-domain matching correlation analysis.

Items from several feature spaces, linked by sparse match weights, are
embedded into one shared low-dimensional space by per-domain linear
projections. The projections maximize the weighted agreement of matched
items under a joint normalization constraint, computed as the top
eigenvectors of a whitened matrix pencil.
"""

from .crossval import (
    CvConfig,
    CvReport,
    HoldoutSplit,
    cv_error,
    holdout_split,
    select_hyperparams,
)
from .data import (
    BlockDataMatrix,
    DomainTable,
    apply_standardization,
    augment,
    load_domain_table,
    save_domain_table,
    standardize_columns,
)
from .embedding import (
    Embedding,
    QueryResult,
    embed,
    project_tables,
    project_vector,
    query_knn,
    rescale_unit_variance,
)
from .errors import (
    ConstantColumnError,
    DuplicateEdgeError,
    OutOfRangeError,
    SingularGError,
    ZeroVarianceError,
    ZeroWeightError,
)
from .evaluation import (
    ErrorReport,
    matching_error,
    normalize_weights,
    per_pc_error,
    weighted_rescale,
)
from .layout import DomainLayout
from .model import Model, fit, load_model, save_model
from .solver import (
    Pencil,
    SolverConfig,
    SpectralSolution,
    assemble_pencil,
    check_constraint,
    default_regularizer_scale,
    objective_identity_check,
    pencil_from_forms,
    solve,
    split_projections,
    xtmx_blocks,
    xtwx,
)
from .synth import (
    SynthConfig,
    SynthDataset,
    generate,
    grid_index,
    latent_points,
    load_provenance,
    sample_weights,
    save_provenance,
    true_weights,
)
from .weights import (
    DegreeMatrix,
    EdgeCoding,
    WeightGraph,
    degree_matrix,
    edge_coding,
    load_weights,
    mcca_weights,
    save_weights,
    validate_weights,
)

__version__ = "0.1.0"
