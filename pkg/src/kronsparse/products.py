"""Bipartite graph products, chains, blocking levels, and pattern validation.

The product of two bipartite graphs pairs vertices componentwise and takes
the cross product of the edge sets; its biadjacency matrix is the Kronecker
(tensor) product of the factors' biadjacency matrices. A chain of K biregular
factors therefore yields a matrix whose nonzero pattern is recursively cloned
uniform block-sparse (RCUBS) at K-1 nested blocking levels, while only the
base graphs' adjacency lists need to be stored.

Composite indices are row-major mixed radix: left vertex (u1, u2) maps to
u1 * |U2| + u2, matching the Kronecker layout so the graph view and matrix
view agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    CapacityError,
    CertificationError,
    ChainFileError,
    InvalidArgumentError,
)
from .generate import DEFAULT_MAX_ATTEMPTS, LiftChainSpec, generate_ramanujan
from .graphs import (
    BipartiteGraph,
    check_ramanujan,
    complete_graph,
    parse_graph_text,
    require_biregular,
    singular_values,
)

ROLE_SPARSE = "sparse"
ROLE_COMPLETE = "complete"

#: Composite dimensions must stay indexable by signed 32-bit ints, and a
#: materialized product is refused beyond this many edges.
MAX_DIMENSION = 2**31 - 1
MAX_MATERIALIZED_EDGES = 1 << 27


@dataclass(frozen=True)
class RbgpChain:
    """Ordered biregular base graphs with sparse/complete role tags.

    The chain defines a product graph without materializing it. A graph
    tagged complete must actually be a full bipartite graph; roles default
    to completeness inferred per factor.
    """

    graphs: tuple[BipartiteGraph, ...]
    roles: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.graphs:
            raise InvalidArgumentError("chain needs at least one base graph")
        if not self.roles:
            object.__setattr__(
                self,
                "roles",
                tuple(
                    ROLE_COMPLETE if g.is_complete() else ROLE_SPARSE
                    for g in self.graphs
                ),
            )
        if len(self.roles) != len(self.graphs):
            raise InvalidArgumentError(
                f"{len(self.roles)} roles for {len(self.graphs)} graphs"
            )
        for i, (g, role) in enumerate(zip(self.graphs, self.roles)):
            if role not in (ROLE_SPARSE, ROLE_COMPLETE):
                raise InvalidArgumentError(f"unknown role {role!r} for factor {i}")
            require_biregular(g)
            if role == ROLE_COMPLETE and not g.is_complete():
                raise InvalidArgumentError(
                    f"factor {i} is tagged complete but has "
                    f"{g.num_edges} < {g.num_left * g.num_right} edges"
                )

    @property
    def k(self) -> int:
        return len(self.graphs)

    @property
    def num_left(self) -> int:
        return math.prod(g.num_left for g in self.graphs)

    @property
    def num_right(self) -> int:
        return math.prod(g.num_right for g in self.graphs)

    @property
    def row_nnz(self) -> int:
        """Nonzeros per product row: the product of factor left degrees."""
        return math.prod(len(g.adjacency[0]) for g in self.graphs)

    @property
    def full_edges(self) -> int:
        return math.prod(g.num_edges for g in self.graphs)

    @property
    def stored_edges(self) -> int:
        return sum(g.num_edges for g in self.graphs)

    @property
    def sparsity(self) -> float:
        return 1.0 - self.row_nnz / self.num_right


class EdgeCounts(NamedTuple):
    full_edges: int
    stored_edges: int
    ratio: float


def compressed_edge_count(chain: RbgpChain) -> EdgeCounts:
    """Product-graph edge count vs. the sum stored for the base graphs."""
    full = chain.full_edges
    stored = chain.stored_edges
    return EdgeCounts(full, stored, full / stored)


def product(g1: BipartiteGraph, g2: BipartiteGraph) -> BipartiteGraph:
    """Bipartite graph product; biadjacency equals the Kronecker product.

    Left vertex (u1, u2) becomes u1 * |U2| + u2 and right vertex (v1, v2)
    becomes v1 * |V2| + v2; the edge set is the cross product of the factor
    edge sets.
    """
    nl = g1.num_left * g2.num_left
    nr = g1.num_right * g2.num_right
    if nl > MAX_DIMENSION or nr > MAX_DIMENSION:
        raise CapacityError(f"product dimensions ({nl}, {nr}) exceed index capacity")
    if g1.num_edges * g2.num_edges > MAX_MATERIALIZED_EDGES:
        raise CapacityError(
            f"product would materialize {g1.num_edges * g2.num_edges} edges"
        )
    r2 = g2.num_right
    adjacency = tuple(
        tuple(v1 * r2 + v2 for v1 in row1 for v2 in row2)
        for row1 in g1.adjacency
        for row2 in g2.adjacency
    )
    return BipartiteGraph(nl, nr, adjacency)


def chain_product(chain: RbgpChain) -> BipartiteGraph:
    """Left-associated fold of `product` over the chain's base graphs."""
    return reduce(product, chain.graphs)


@dataclass(frozen=True)
class BlockingLevels:
    """Nested block sizes (bh_j, bw_j), coarsest first, each dividing the last.

    A level may equal its predecessor in one (or, for unit factors, both)
    dimensions; it must never grow or fail to divide.
    """

    levels: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prev = None
        for bh, bw in self.levels:
            if bh < 1 or bw < 1:
                raise InvalidArgumentError(f"non-positive blocking level ({bh}, {bw})")
            if prev is not None:
                ph, pw = prev
                if not (ph >= bh and pw >= bw and ph % bh == 0 and pw % bw == 0):
                    raise InvalidArgumentError(
                        f"level ({bh}, {bw}) does not divide ({ph}, {pw})"
                    )
            prev = (bh, bw)

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.levels)


def blocking_levels(chain: RbgpChain) -> BlockingLevels:
    """The K-1 blocking levels of a K-factor chain (empty for K = 1).

    Level j is the size of the product of factors j+1..K, i.e. the block that
    factor j's biadjacency gets expanded by in the Kronecker product.
    """
    sizes = []
    bh, bw = 1, 1
    for g in reversed(chain.graphs[1:]):
        bh *= g.num_left
        bw *= g.num_right
        sizes.append((bh, bw))
    return BlockingLevels(tuple(reversed(sizes)))


@dataclass(frozen=True)
class RcubsValidation:
    """Outcome of a pattern check; falsy with a first-violation diagnostic."""

    ok: bool
    level: int | None = None
    block: tuple[int, int] | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_rcubs(
    pattern: np.ndarray, levels: BlockingLevels | Iterable[tuple[int, int]]
) -> RcubsValidation:
    """Check that a 0/1 matrix is recursively cloned uniform block-sparse.

    At every level j: all nonzero blocks of size B_j must share one
    elementwise nonzero pattern (cloned), and within each nonzero block of
    level j-1 (the whole matrix for j = 1) every block-row and block-column
    must contain the same number of nonzero B_j blocks (uniform).

    Returns the first violation found, coarsest level first, with the
    offending block coordinates.
    """
    if not isinstance(levels, BlockingLevels):
        levels = BlockingLevels(tuple((int(h), int(w)) for h, w in levels))
    mask = np.asarray(pattern) != 0
    if mask.ndim != 2:
        raise InvalidArgumentError(f"pattern must be 2-D, got shape {mask.shape}")
    rows, cols = mask.shape
    if len(levels) == 0:
        return RcubsValidation(ok=True)
    for bh, bw in levels:
        if rows % bh or cols % bw:
            raise InvalidArgumentError(
                f"pattern shape ({rows}, {cols}) not divisible by level ({bh}, {bw})"
            )

    parent_nnz = np.array([[mask.any()]])
    parent_shape = (rows, cols)
    for j, (bh, bw) in enumerate(levels, start=1):
        blocks = mask.reshape(rows // bh, bh, cols // bw, bw).transpose(0, 2, 1, 3)
        nnz = blocks.any(axis=(2, 3))
        occupied = np.argwhere(nnz)
        if len(occupied) > 1:
            ref = blocks[occupied[0][0], occupied[0][1]]
            for p, q in occupied[1:]:
                if not np.array_equal(blocks[p, q], ref):
                    return RcubsValidation(
                        ok=False,
                        level=j,
                        block=(int(p), int(q)),
                        reason=f"block ({p}, {q}) at level {j} differs from the "
                        f"cloned pattern of block ({occupied[0][0]}, {occupied[0][1]})",
                    )
        ph, pw = parent_shape[0] // bh, parent_shape[1] // bw
        for pi in range(parent_nnz.shape[0]):
            for pj in range(parent_nnz.shape[1]):
                if not parent_nnz[pi, pj]:
                    continue
                sub = nnz[pi * ph : (pi + 1) * ph, pj * pw : (pj + 1) * pw]
                row_counts = sub.sum(axis=1)
                col_counts = sub.sum(axis=0)
                if row_counts.min() != row_counts.max():
                    return RcubsValidation(
                        ok=False,
                        level=j,
                        block=(pi, pj),
                        reason=f"uneven nonzero-block count per block-row inside "
                        f"parent ({pi}, {pj}) at level {j}",
                    )
                if col_counts.min() != col_counts.max():
                    return RcubsValidation(
                        ok=False,
                        level=j,
                        block=(pi, pj),
                        reason=f"uneven nonzero-block count per block-column inside "
                        f"parent ({pi}, {pj}) at level {j}",
                    )
        parent_nnz = nnz
        parent_shape = (bh, bw)
    return RcubsValidation(ok=True)


def product_lambda2(chain: RbgpChain) -> float:
    """Second largest singular value of the (unmaterialized) product graph.

    The product's singular values are all pairwise products of the factors'
    singular values, so this sorts those products and drops exactly one copy
    of the top one. Multiplicity counts: a repeated top value (disconnected
    product) makes the result equal the largest.
    """
    combos = reduce(np.multiply.outer, (singular_values(g) for g in chain.graphs))
    flat = np.sort(combos.ravel())[::-1]
    if flat.size < 2:
        return 0.0
    return float(flat[1])


def gap_ratio(d: int) -> float:
    """Ideal-to-constructed spectral gap ratio for two equal d-regular factors.

    The product of two d-regular factors whose second singular value sits at
    the Ramanujan bound 2*sqrt(d-1) is d^2-regular with second value
    d * 2*sqrt(d-1); the ratio of the ideal gap d^2 - 2*sqrt(d^2-1) to the
    constructed gap d^2 - 2d*sqrt(d-1) measures how close to optimal the
    construction is. It decreases monotonically to 1 as d grows.
    """
    if not isinstance(d, (int, np.integer)) or d < 3:
        raise InvalidArgumentError(
            f"gap ratio is defined for integer degree d >= 3, got {d!r}"
        )
    dd = float(d) * float(d)
    return (dd - 2.0 * math.sqrt(dd - 1.0)) / (dd - 2.0 * d * math.sqrt(d - 1.0))


def combined_sparsity(sp_outer: float, sp_inner: float) -> float:
    """Total sparsity of a pattern built from two sparse factors."""
    return 1.0 - (1.0 - sp_outer) * (1.0 - sp_inner)


@dataclass(frozen=True)
class Rbgp4Config:
    """Four-factor chain configuration for the tiled multiply.

    Factor roles, in order: `g_o` induces tile-level sparsity (outer), `g_r`
    and `g_b` are complete and induce row repetition at the stride and
    micro-block granularity, `g_i` carries the fine-grained in-tile sparsity.
    `g_o` and `g_i` must pass the Ramanujan certificate; `g_r` and `g_b`
    must be complete.
    """

    g_o: BipartiteGraph
    g_r: BipartiteGraph
    g_i: BipartiteGraph
    g_b: BipartiteGraph
    precision: str = "f64"

    def __post_init__(self):
        if self.precision not in ("f32", "f64"):
            raise InvalidArgumentError(
                f"precision must be 'f32' or 'f64', got {self.precision!r}"
            )
        for name, g in (("g_r", self.g_r), ("g_b", self.g_b)):
            if not g.is_complete():
                raise InvalidArgumentError(f"{name} must be a complete bipartite graph")
        for name, g in (("g_o", self.g_o), ("g_i", self.g_i)):
            report = check_ramanujan(g)
            if not report.is_ramanujan:
                raise CertificationError(
                    f"{name} fails the Ramanujan certificate: "
                    f"lambda2={report.sigma2:.6g} > bound={report.ramanujan_bound:.6g}"
                )

    @property
    def total_sparsity(self) -> float:
        return combined_sparsity(self.g_o.sparsity, self.g_i.sparsity)

    def to_chain(self) -> RbgpChain:
        return RbgpChain((self.g_o, self.g_r, self.g_i, self.g_b))


# -- chain description files --------------------------------------------------
#
# One factor per line, in product order. Blank lines and '#' comments are
# skipped. Entry forms:
#
#   complete M N                   complete bipartite factor
#   graph PATH role=sparse         load a factor from a graph text file
#   sparse M N SPARSITY [seed=K]   generate a certified factor in place
#
# Paths are resolved relative to the chain file's directory.


@dataclass(frozen=True)
class ChainEntry:
    kind: str  # "complete" | "graph" | "sparse"
    num_left: int = 0
    num_right: int = 0
    path: str = ""
    role: str = ROLE_SPARSE
    sparsity: float = 0.0
    seed: int | None = None


def parse_chain_file(text: str) -> list[ChainEntry]:
    entries: list[ChainEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        try:
            if toks[0] == "complete" and len(toks) == 3:
                entries.append(
                    ChainEntry(
                        kind="complete",
                        num_left=int(toks[1]),
                        num_right=int(toks[2]),
                        role=ROLE_COMPLETE,
                    )
                )
            elif toks[0] == "graph" and len(toks) == 3 and toks[2].startswith("role="):
                role = toks[2][len("role=") :]
                if role not in (ROLE_SPARSE, ROLE_COMPLETE):
                    raise ChainFileError(f"line {lineno}: unknown role {role!r}")
                entries.append(ChainEntry(kind="graph", path=toks[1], role=role))
            elif toks[0] == "sparse" and len(toks) in (4, 5):
                seed = None
                if len(toks) == 5:
                    if not toks[4].startswith("seed="):
                        raise ChainFileError(
                            f"line {lineno}: expected seed=<int>, got {toks[4]!r}"
                        )
                    seed = int(toks[4][len("seed=") :])
                entries.append(
                    ChainEntry(
                        kind="sparse",
                        num_left=int(toks[1]),
                        num_right=int(toks[2]),
                        sparsity=float(toks[3]),
                        seed=seed,
                    )
                )
            else:
                raise ChainFileError(f"line {lineno}: unrecognized entry {line!r}")
        except ValueError as exc:
            raise ChainFileError(f"line {lineno}: {exc}") from exc
    if not entries:
        raise ChainFileError("chain file defines no factors")
    return entries


def resolve_chain(
    entries: Sequence[ChainEntry],
    base_dir: Path | str = ".",
    seed: int = 0,
    max_attempts: int | None = None,
) -> RbgpChain:
    """Build the chain: load graph files, generate sparse factors, certify.

    Generated factors draw from independent streams derived from `seed` and
    the entry index (an explicit per-entry seed wins), so a chain file plus a
    seed is fully reproducible. Sparse-role factors loaded from files are
    re-certified here.
    """
    base = Path(base_dir)
    graphs: list[BipartiteGraph] = []
    roles: list[str] = []
    for index, entry in enumerate(entries):
        if entry.kind == "complete":
            graphs.append(complete_graph(entry.num_left, entry.num_right))
            roles.append(ROLE_COMPLETE)
        elif entry.kind == "graph":
            path = base / entry.path
            try:
                g = parse_graph_text(path.read_text())
            except OSError as exc:
                raise ChainFileError(f"cannot read graph file {path}: {exc}") from exc
            if entry.role == ROLE_SPARSE:
                report = check_ramanujan(g)
                if not report.is_ramanujan:
                    raise CertificationError(
                        f"factor {index} ({path}) fails the Ramanujan certificate: "
                        f"lambda2={report.sigma2:.6g} > {report.ramanujan_bound:.6g}"
                    )
            graphs.append(g)
            roles.append(entry.role)
        else:  # sparse, generated
            entry_seed = (
                entry.seed
                if entry.seed is not None
                else int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
            )
            spec = LiftChainSpec(
                target_left=entry.num_left,
                target_right=entry.num_right,
                sparsity=entry.sparsity,
                rng_seed=entry_seed,
                max_attempts=max_attempts or DEFAULT_MAX_ATTEMPTS,
            )
            result = generate_ramanujan(spec)
            graphs.append(result.graph)
            roles.append(ROLE_SPARSE)
    return RbgpChain(tuple(graphs), tuple(roles))
