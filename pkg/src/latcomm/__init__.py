"""Lattice quantization tools: nearest-plane rounding, its exact and
Monte Carlo error probability in 2D, and communication protocols that
compute the rounding distributively."""

from .babai import (
    BabaiCell,
    NearestPlaneResult,
    babai_cell,
    nearest_plane,
    np_matches_cvp,
    round_nearest,
)
from .error_analysis import (
    PE_CSV_HEADER,
    PeEstimate,
    VoronoiPolygon2D,
    analytic_pe,
    analytic_pe_polar,
    exact_pe_area,
    level_curve_points,
    monte_carlo_pe,
    third_relevant_vector,
    voronoi_polygon_general,
    voronoi_vertices_reduced,
)
from .lattice import (
    MAX_CVP_DIM,
    DegenerateBasisError,
    GeneratorMatrix,
    GramSchmidt,
    LatticeVector,
    ReducedBasis2D,
    UnsupportedDimensionError,
    canonicalize_2d,
    cvp_bruteforce,
    cvp_bruteforce_batch,
    gauss_reduce_2d,
    gram_schmidt,
    is_minkowski_reduced_2d,
    qr_upper_triangular,
    round_half_up,
)
from .protocol import (
    CentralizedMessage,
    Message,
    ProtocolError,
    ProtocolUnsupportedError,
    RatioTable,
    SourceModel,
    Transcript,
    build_ratio_table,
    centralized_rate_bound,
    empirical_entropy,
    fusion_decode,
    interactive_coefficients_batch,
    interactive_rate,
    node_encode,
    run_centralized,
    run_interactive,
    varint_bits,
    varint_decode,
    varint_encode,
)

__version__ = "0.1.0"

__all__ = [
    "BabaiCell",
    "CentralizedMessage",
    "DegenerateBasisError",
    "GeneratorMatrix",
    "GramSchmidt",
    "LatticeVector",
    "MAX_CVP_DIM",
    "Message",
    "NearestPlaneResult",
    "PE_CSV_HEADER",
    "PeEstimate",
    "ProtocolError",
    "ProtocolUnsupportedError",
    "RatioTable",
    "ReducedBasis2D",
    "SourceModel",
    "Transcript",
    "UnsupportedDimensionError",
    "analytic_pe",
    "analytic_pe_polar",
    "babai_cell",
    "build_ratio_table",
    "canonicalize_2d",
    "centralized_rate_bound",
    "cvp_bruteforce",
    "cvp_bruteforce_batch",
    "empirical_entropy",
    "exact_pe_area",
    "fusion_decode",
    "gauss_reduce_2d",
    "gram_schmidt",
    "interactive_coefficients_batch",
    "interactive_rate",
    "is_minkowski_reduced_2d",
    "level_curve_points",
    "monte_carlo_pe",
    "nearest_plane",
    "node_encode",
    "np_matches_cvp",
    "qr_upper_triangular",
    "round_half_up",
    "round_nearest",
    "run_centralized",
    "run_interactive",
    "third_relevant_vector",
    "varint_bits",
    "varint_decode",
    "varint_encode",
    "voronoi_polygon_general",
    "voronoi_vertices_reduced",
]
