"""Random 2-lifts and rejection sampling of Ramanujan bipartite graphs.

A 2-lift doubles a graph: every vertex u gets a clone u^c, and every edge
(u, v) is replaced, by a fair coin flip, with either the identity pair
{(u, v), (u^c, v^c)} or the crossover pair {(u, v^c), (u^c, v)}. Lifting
preserves biregularity and exact degrees, and doubles vertex and edge counts.

A biregular graph with vertex counts (L, R) and sparsity sp (where 1/(1-sp)
is a power of two) is produced by applying log2(1/(1-sp)) lifts to the
complete bipartite graph on ((1-sp)*L, (1-sp)*R) vertices. Sampling repeats
with fresh coins until the result passes the Ramanujan certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import GenerationExhaustedError, InvalidArgumentError
from .graphs import BipartiteGraph, SpectralReport, check_ramanujan, complete_graph

DEFAULT_MAX_ATTEMPTS = 1000


def make_rng(seed: int | np.random.Generator) -> np.random.Generator:
    """Counter-based (Philox) generator for a seed; pass generators through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class LiftChainSpec:
    """Target shape and sparsity for the lift-chain generator.

    `sparsity` must make 1/(1-sparsity) an exact power of two (the number of
    lifts), and the starting complete-graph dimensions (1-sparsity)*target
    must come out as positive integers.
    """

    target_left: int
    target_right: int
    sparsity: float
    rng_seed: int = 0
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if not 0.0 <= self.sparsity < 1.0:
            raise InvalidArgumentError(
                f"sparsity must be in [0, 1), got {self.sparsity}"
            )
        frac = Fraction(1.0 - self.sparsity)
        if frac.numerator != 1 or frac.denominator & (frac.denominator - 1):
            raise InvalidArgumentError(
                f"1/(1-sparsity) must be an exact power of two, got sparsity={self.sparsity}"
            )
        for name, target in (("target_left", self.target_left),
                             ("target_right", self.target_right)):
            scaled = target * frac
            if target < 1 or scaled.denominator != 1 or scaled.numerator < 1:
                raise InvalidArgumentError(
                    f"(1-sparsity)*{name} must be a positive integer, "
                    f"got {name}={target} at sparsity={self.sparsity}"
                )
        if self.max_attempts < 1:
            raise InvalidArgumentError(
                f"max_attempts must be positive, got {self.max_attempts}"
            )

    @property
    def num_lifts(self) -> int:
        return Fraction(1.0 - self.sparsity).denominator.bit_length() - 1

    @property
    def start_left(self) -> int:
        return self.target_left >> self.num_lifts

    @property
    def start_right(self) -> int:
        return self.target_right >> self.num_lifts


def two_lift(g: BipartiteGraph, rng: np.random.Generator) -> BipartiteGraph:
    """Random 2-lift of `g`: twice the vertices, twice the edges, same degrees.

    The clone of left vertex u is u + num_left (and v + num_right on the
    right). Coins are drawn one per edge, edges enumerated left vertex first,
    neighbors in sorted order, so a fixed generator state fixes the result.
    """
    L, R = g.num_left, g.num_right
    coins = rng.integers(0, 2, size=g.num_edges, dtype=np.uint8)
    lifted: list[list[int]] = [[] for _ in range(2 * L)]
    e = 0
    for u, row in enumerate(g.adjacency):
        for v in row:
            if coins[e]:  # crossover pair
                lifted[u].append(v + R)
                lifted[u + L].append(v)
            else:  # identity pair
                lifted[u].append(v)
                lifted[u + L].append(v + R)
            e += 1
    return BipartiteGraph(2 * L, 2 * R, tuple(tuple(sorted(r)) for r in lifted))


def generate_biregular(
    spec: LiftChainSpec, rng: np.random.Generator | None = None
) -> BipartiteGraph:
    """One lift-chain sample: complete start graph plus `spec.num_lifts` lifts.

    The result has the target dimensions, is biregular with
    d_left = (1-sparsity)*target_right, and has sparsity exactly
    `spec.sparsity`. No spectral condition is checked here.
    """
    rng = make_rng(spec.rng_seed) if rng is None else rng
    g = complete_graph(spec.start_left, spec.start_right)
    for _ in range(spec.num_lifts):
        g = two_lift(g, rng)
    return g


@dataclass(frozen=True)
class GenerationResult:
    graph: BipartiteGraph
    attempts: int
    report: SpectralReport


def generate_ramanujan(
    spec: LiftChainSpec, rng: np.random.Generator | None = None
) -> GenerationResult:
    """Sample lift-chain graphs until one passes the Ramanujan certificate.

    Every rejection re-randomizes all lifts (a fresh sample, not a repair).
    Identical spec and seed give the identical graph. Raises
    GenerationExhaustedError carrying the best second singular value seen if
    `spec.max_attempts` samples all fail.
    """
    rng = make_rng(spec.rng_seed) if rng is None else rng
    best_lambda2 = math.inf
    bound = 0.0
    for attempt in range(1, spec.max_attempts + 1):
        g = generate_biregular(spec, rng)
        report = check_ramanujan(g)
        if report.is_ramanujan:
            return GenerationResult(graph=g, attempts=attempt, report=report)
        best_lambda2 = min(best_lambda2, report.sigma2)
        bound = report.ramanujan_bound
    raise GenerationExhaustedError(spec.max_attempts, best_lambda2, bound)
