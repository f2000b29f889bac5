"""Spline-like two-channel wavelet filterbanks with perfect reconstruction
on arbitrary connected weighted graphs."""

from .design import (
    DesignConfig,
    DesignInfeasible,
    FilterDesign,
    FilterPair,
    build_filters,
    closed_form_weights,
    design,
    ideal_lowpass,
    solve_liter_opt,
    solve_ori_opt,
    solve_reg_opt,
    validate_response,
)
from .filterbank import (
    AssemblyError,
    ChannelOutputs,
    Filterbank,
    analyze,
    assemble,
    check_legacy_counterexample,
    error_bound,
    lp_only_reconstruct,
    reconstruct,
)
from .graph import Graph, GraphError, NormalizedGraph, generate_graph, load_graph, normalize
from .mra import Pyramid, decompose, denoise, kron_reduce, reconstruct_pyramid, relative_error
from .sampling import (
    SamplingPattern,
    bipartite_natural_partition,
    partition_search,
    polarity_assign,
    sigma_min_diagnostic,
)
from .spectral import (
    DedupedSpectrum,
    SpectralDecomposition,
    VandermondeSystem,
    dedup_eigenvalues,
    eigendecompose,
    gft,
    igft,
    vandermonde,
)

__version__ = "0.1.0"
