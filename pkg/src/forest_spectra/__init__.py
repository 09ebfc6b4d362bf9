"""Spectral CDF estimation from coupled random spanning forests.

The main entry points are :class:`SpectralCDFEstimator` (scikit-learn
style) and :func:`estimate_cdf` (configuration driven); lower-level
building blocks live in the submodules:

``graph``      weighted graphs, Laplacian scalars, neighbour sampling
``io``         edge-list and Matrix Market files
``forest``     Wilson forests and coupled trajectories
``replicas``   replica composition and moment estimates
``moments``    truncated moment problem and Markov bounds
``maxent``     maximum-entropy reconstruction
``embed``      shifts and double covers of symmetric matrices
``pipeline``   orchestration, dense oracle, cost benchmarks
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ForestSpectraError,
    GraphError,
    GraphFormatError,
    NegativeWeight,
    NumericalDegeneracyError,
    OracleSizeError,
    SingularMomentError,
)
from .graph import GraphScalars, WeightedGraph, graph_scalars, sample_neighbor  # noqa: E402
from .io import load_graph, load_matrix  # noqa: E402
from .forest import (  # noqa: E402
    Forest,
    coupled_trajectory,
    cost_bounds,
    root_of,
    wilson_sample,
)
from .replicas import QGrid, estimate_moments, group_variance_check, make_grid, xi_sizes  # noqa: E402
from .moments import (  # noqa: E402
    AtomicMeasure,
    MarkovBounds,
    MomentSequence,
    admissible_interval,
    canonical_representation,
    markov_bounds,
    orthogonal_polynomials,
    principal_representations,
    validate_sequence,
)
from .maxent import MaxentModel, maxent_fit, moment_integrals, tail_probability  # noqa: E402
from .embed import (  # noqa: E402
    CoverPair,
    SymmetricMatrix,
    combine_cdfs,
    double_cover,
    make_sub_laplacian,
    shift_to_dominant,
)
from .generators import generate_graph  # noqa: E402
from .pipeline import RunConfig, SpectralReport, bench_costs, estimate_cdf, exact_oracle  # noqa: E402
from .estimator import RationalMomentTransformer, SpectralCDFEstimator  # noqa: E402

__all__ = [
    "AtomicMeasure", "CoverPair", "Forest", "ForestSpectraError", "GraphError", "GraphFormatError",
    "GraphScalars", "MarkovBounds", "MaxentModel", "MomentSequence", "NegativeWeight",
    "NumericalDegeneracyError", "OracleSizeError", "QGrid", "RationalMomentTransformer", "RunConfig",
    "SingularMomentError", "SpectralCDFEstimator", "SpectralReport", "SymmetricMatrix", "WeightedGraph",
    "admissible_interval", "bench_costs", "canonical_representation", "combine_cdfs", "cost_bounds",
    "coupled_trajectory", "double_cover", "estimate_cdf", "estimate_moments", "exact_oracle",
    "generate_graph", "graph_scalars", "group_variance_check", "load_graph", "load_matrix", "make_grid",
    "make_sub_laplacian", "markov_bounds", "maxent_fit", "moment_integrals", "orthogonal_polynomials",
    "principal_representations", "root_of", "sample_neighbor", "shift_to_dominant", "tail_probability",
    "validate_sequence", "wilson_sample", "xi_sizes",
]
