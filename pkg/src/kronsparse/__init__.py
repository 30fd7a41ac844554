"""Well-connected block-sparse matrices from bipartite graph products.

The package builds sparse matrices whose nonzero pattern is a Kronecker
product of small certified expander (Ramanujan) bipartite graphs, stores
them with the base graphs as the entire index structure, and multiplies
them against dense matrices with a tiled, multi-threaded kernel that skips
zero tiles and reuses row-repetition structure.
"""

from .errors import (
    BadMagicError,
    CapacityError,
    CertificationError,
    ChainFileError,
    ChecksumMismatchError,
    ConfigurationError,
    GenerationExhaustedError,
    GraphTextError,
    InvalidArgumentError,
    KronsparseError,
    NotBiregularError,
    NumericalError,
    PatternViolationError,
    PrecisionMismatchError,
    SerializationError,
    ShapeError,
    TruncatedStreamError,
    UnsupportedChainError,
)
from .generate import (
    GenerationResult,
    LiftChainSpec,
    generate_biregular,
    generate_ramanujan,
    make_rng,
    two_lift,
)
from .graphs import (
    RAMANUJAN_TOL,
    BipartiteGraph,
    BiregularDegrees,
    SpectralReport,
    biadjacency,
    biregular_degrees,
    check_ramanujan,
    complete_graph,
    from_biadjacency,
    graph_to_text,
    parse_graph_text,
    singular_values,
)
from .products import (
    BlockingLevels,
    EdgeCounts,
    Rbgp4Config,
    RbgpChain,
    RcubsValidation,
    blocking_levels,
    chain_product,
    combined_sparsity,
    compressed_edge_count,
    gap_ratio,
    parse_chain_file,
    product,
    product_lambda2,
    resolve_chain,
    validate_rcubs,
)
from .rcubs import (
    CsrMatrix,
    MemoryFootprint,
    RcubsMatrix,
    deserialize,
    init_random,
    memory_footprint,
    neighbors,
    serialize,
)
from .sdmm import (
    TilingParams,
    WorkReport,
    dense_gemm,
    derive_tiling,
    rbgp4mm,
    sdmm_reference,
    tiling_for_chain,
    with_workers,
)

__version__ = "0.1.0"
