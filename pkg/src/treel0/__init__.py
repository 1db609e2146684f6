"""treel0: fit tree metrics and ultrametrics to a distance matrix so as to
minimize the number of disagreeing pairs, in exact rational arithmetic."""

from ._backend import get_backend, set_backend
from .constrained import (
    SqueezedMatrix,
    fit_constrained,
    fit_constrained_exact,
    format_constrained_instance,
    parse_constrained_instance,
    squeeze,
    squeeze_ultrametric,
)
from .core import (
    ConstrainedInstance,
    DistanceMatrix,
    FitReport,
    FormatError,
    InvariantError,
    LabelMismatchError,
    MetricWitness,
    SolverLimitError,
    StructureError,
    TreeL0Error,
    TreeMetricMatrix,
    UltrametricMatrix,
    as_rational,
    check_constrained,
    check_tree_metric,
    check_ultrametric,
    disagreements,
    format_distance_matrix,
    format_rational,
    l0_distance,
    parse_distance_matrix,
    witness_holds,
)
from .instances import (
    Graph,
    PlantedInstance,
    cc_bruteforce,
    cc_cost,
    clustering_to_tree,
    format_graph,
    gen_correlation,
    gen_planted,
    parse_graph,
    random_hierarchy,
    random_tree,
    tree_to_clustering,
)
from .treebuild import (
    ExplicitTree,
    matrix_to_tree,
    parse_newick,
    serialize_newick,
    ultrametric_to_dendrogram,
)
from .treefit import (
    AlphaRestrictedCertificate,
    CentroidQuasimetric,
    alpha_restrict,
    add_quasimetric,
    centroid_quasimetric,
    constrained_to_tree,
    fit_tree,
    restricted_instance,
    restriction_certificate,
    subtract_quasimetric,
    tree_to_constrained,
)
from .ultrafit import (
    Hierarchy,
    UltraSolverSpec,
    fit_ultrametric_bruteforce,
    fit_ultrametric_exact,
    fit_ultrametric_heuristic,
    solve,
)

__version__ = "0.1.0"
