"""Euclidean distances, weighted MDS and thermodynamic soft clustering on weighted graphs."""

from .distances import (
    DistanceMatrix,
    GSpec,
    PhiSpec,
    absorption_visits,
    dirichlet_energy,
    electrical_commute,
    fundamental_matrix,
    jump_distance,
    jump_distance_closed_form,
    natural_distance,
    schoenberg_transform,
    shortest_path_distance,
)
from .errors import (
    ConvergenceError,
    DisconnectedGraphError,
    InputError,
    NotDiffusiveError,
    NumericalError,
)
from .euclid_mds import Embedding, centroid_and_inertia, is_squared_euclidean, mds
from .flow_ingest import (
    ExchangeMatrix,
    FlowMatrix,
    exchange_from_flows,
    load_flow_matrix,
    strip_diagonal,
    symmetrize,
    to_exchange,
)
from .spectral import (
    SpectralBasis,
    decompose,
    find_equivalent_pairs,
    ncut_relaxation_bound,
    standardized,
    t_step,
    weakly_equivalent_pairs,
)
from .thermo_cluster import (
    AnnealOptions,
    AnnealingTrace,
    GroupStats,
    anneal,
    em_step,
    free_energy,
    geometric_schedule,
    group_stats,
    hard_membership,
    iterate_to_convergence,
    merge_equivalent_groups,
    mutual_information,
    variation_of_information,
)

__version__ = "0.1.0"
