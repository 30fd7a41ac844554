"""Bipartite graphs, biadjacency matrices, and spectral connectivity checks.

A bipartite graph is stored as per-left-vertex sorted adjacency lists. The
spectrum of a bipartite graph's adjacency matrix is (up to sign) the set of
singular values of its biadjacency matrix, so all spectral work here is done
with a dense SVD of the biadjacency. A biregular graph with degrees
(d_left, d_right) is certified as Ramanujan when its second largest singular
value is at most sqrt(d_left - 1) + sqrt(d_right - 1); that bound is the
optimal-connectivity threshold for the graph's sparsity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from .errors import (
    GraphTextError,
    InvalidArgumentError,
    NotBiregularError,
    NumericalError,
)

#: Absolute tolerance used when comparing singular values against the
#: Ramanujan bound: larger than SVD roundoff, far smaller than any spectral
#: quantity of interest.
RAMANUJAN_TOL = 1e-7


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph with `num_left` left and `num_right` right vertices.

    `adjacency[u]` is the strictly increasing tuple of right-vertex indices
    adjacent to left vertex `u`. Instances are immutable and safe to share
    across threads.
    """

    num_left: int
    num_right: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_left < 1 or self.num_right < 1:
            raise InvalidArgumentError(
                f"vertex counts must be positive, got ({self.num_left}, {self.num_right})"
            )
        if len(self.adjacency) != self.num_left:
            raise InvalidArgumentError(
                f"adjacency has {len(self.adjacency)} rows, expected {self.num_left}"
            )
        for u, row in enumerate(self.adjacency):
            if any(row[i] >= row[i + 1] for i in range(len(row) - 1)):
                raise InvalidArgumentError(
                    f"adjacency of left vertex {u} is not strictly increasing"
                )
            if row and (row[0] < 0 or row[-1] >= self.num_right):
                raise InvalidArgumentError(
                    f"adjacency of left vertex {u} has out-of-range neighbor"
                )

    @property
    def num_edges(self) -> int:
        return sum(len(row) for row in self.adjacency)

    @property
    def sparsity(self) -> float:
        """Fraction of absent edges: 1 - |E| / (|U| * |V|)."""
        return 1.0 - self.num_edges / (self.num_left * self.num_right)

    def left_degrees(self) -> list[int]:
        return [len(row) for row in self.adjacency]

    def right_degrees(self) -> list[int]:
        degs = [0] * self.num_right
        for row in self.adjacency:
            for v in row:
                degs[v] += 1
        return degs

    def is_complete(self) -> bool:
        return self.num_edges == self.num_left * self.num_right

    def adjacency_array(self) -> np.ndarray:
        """Adjacency as an int32 array of shape (num_left, d_left).

        Only defined for graphs whose left degrees are all equal (the array
        would be ragged otherwise).
        """
        degs = {len(row) for row in self.adjacency}
        if len(degs) != 1:
            raise NotBiregularError("left degrees are not uniform")
        return np.array(self.adjacency, dtype=np.int32)


class BiregularDegrees(NamedTuple):
    d_left: int
    d_right: int


@dataclass(frozen=True)
class SpectralReport:
    """Singular-value summary of a biregular graph's biadjacency matrix."""

    sigma1: float
    sigma2: float
    ramanujan_bound: float
    spectral_gap: float
    is_ramanujan: bool

    def to_dict(self) -> dict:
        return {
            "lambda1": self.sigma1,
            "lambda2": self.sigma2,
            "bound": self.ramanujan_bound,
            "spectral_gap": self.spectral_gap,
            "is_ramanujan": self.is_ramanujan,
        }


def complete_graph(num_left: int, num_right: int) -> BipartiteGraph:
    """Complete bipartite graph: every left vertex adjacent to every right one."""
    if num_left < 1 or num_right < 1:
        raise InvalidArgumentError(
            f"complete graph dimensions must be positive, got ({num_left}, {num_right})"
        )
    row = tuple(range(num_right))
    return BipartiteGraph(num_left, num_right, tuple(row for _ in range(num_left)))


def biregular_degrees(g: BipartiteGraph) -> BiregularDegrees | None:
    """Degrees (d_left, d_right) if the graph is biregular, else None.

    Biregular means every left vertex has the same degree and every right
    vertex has the same degree.
    """
    left = {len(row) for row in g.adjacency}
    if len(left) != 1:
        return None
    right = set(g.right_degrees())
    if len(right) != 1:
        return None
    return BiregularDegrees(left.pop(), right.pop())


def require_biregular(g: BipartiteGraph) -> BiregularDegrees:
    """Biregular degrees, or NotBiregularError naming an offending vertex."""
    degs = g.left_degrees()
    if len(set(degs)) != 1:
        bad = next(u for u, d in enumerate(degs) if d != degs[0])
        raise NotBiregularError(
            f"left vertex {bad} has degree {degs[bad]}, others have {degs[0]}"
        )
    rdegs = g.right_degrees()
    if len(set(rdegs)) != 1:
        bad = next(v for v, d in enumerate(rdegs) if d != rdegs[0])
        raise NotBiregularError(
            f"right vertex {bad} has degree {rdegs[bad]}, others have {rdegs[0]}"
        )
    return BiregularDegrees(degs[0], rdegs[0])


def biadjacency(g: BipartiteGraph, dtype=np.float64) -> np.ndarray:
    """0/1 biadjacency matrix of shape (num_left, num_right)."""
    mat = np.zeros((g.num_left, g.num_right), dtype=dtype)
    for u, row in enumerate(g.adjacency):
        if row:
            mat[u, list(row)] = 1
    return mat


def from_biadjacency(mat: np.ndarray) -> BipartiteGraph:
    """Graph whose edges are the nonzero entries of `mat` (inverse of biadjacency)."""
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise InvalidArgumentError(f"biadjacency must be 2-D, got shape {mat.shape}")
    adjacency = tuple(
        tuple(int(v) for v in np.flatnonzero(mat[u])) for u in range(mat.shape[0])
    )
    return BipartiteGraph(mat.shape[0], mat.shape[1], adjacency)


def singular_values(g: BipartiteGraph) -> np.ndarray:
    """All min(|U|, |V|) singular values of the biadjacency, descending.

    The adjacency spectrum of a bipartite graph is exactly +/- these values,
    so the list carries the full spectral information of the graph.
    """
    try:
        return np.linalg.svd(biadjacency(g), compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(
            f"SVD failed on a ({g.num_left}, {g.num_right}) biadjacency: {exc}"
        ) from exc


def check_ramanujan(g: BipartiteGraph, tol: float = RAMANUJAN_TOL) -> SpectralReport:
    """Spectral report with the Ramanujan certificate for a biregular graph.

    sigma2 is the second largest singular value counted with multiplicity, so
    a disconnected graph (which repeats sigma1) generally fails the bound.
    The comparison allows an absolute tolerance `tol` to absorb SVD roundoff;
    graphs sitting exactly on the bound are certified.
    """
    d_left, d_right = require_biregular(g)
    sv = singular_values(g)
    sigma1 = float(sv[0])
    sigma2 = float(sv[1]) if len(sv) > 1 else 0.0
    bound = math.sqrt(d_left - 1) + math.sqrt(d_right - 1)
    return SpectralReport(
        sigma1=sigma1,
        sigma2=sigma2,
        ramanujan_bound=bound,
        spectral_gap=sigma1 - sigma2,
        is_ramanujan=sigma2 <= bound + tol,
    )


# -- graph text format --------------------------------------------------------
#
# Line 1: "num_left num_right"; then one line per left vertex with its sorted
# neighbor indices, space-separated (blank line for an isolated vertex).


def write_graph_text(g: BipartiteGraph, stream: TextIO) -> None:
    stream.write(f"{g.num_left} {g.num_right}\n")
    for row in g.adjacency:
        stream.write(" ".join(str(v) for v in row) + "\n")


def graph_to_text(g: BipartiteGraph) -> str:
    lines = [f"{g.num_left} {g.num_right}"]
    lines.extend(" ".join(str(v) for v in row) for row in g.adjacency)
    return "\n".join(lines) + "\n"


def parse_graph_text(text: str) -> BipartiteGraph:
    lines = text.splitlines()
    if not lines:
        raise GraphTextError("empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise GraphTextError(f"header must be 'num_left num_right', got {lines[0]!r}")
    try:
        num_left, num_right = int(head[0]), int(head[1])
    except ValueError as exc:
        raise GraphTextError(f"non-integer header: {lines[0]!r}") from exc
    if len(lines) < 1 + num_left:
        raise GraphTextError(
            f"expected {num_left} adjacency lines, found {len(lines) - 1}"
        )
    adjacency = []
    for u in range(num_left):
        try:
            row = tuple(int(tok) for tok in lines[1 + u].split())
        except ValueError as exc:
            raise GraphTextError(f"non-integer neighbor on line {u + 2}") from exc
        adjacency.append(row)
    try:
        return BipartiteGraph(num_left, num_right, tuple(adjacency))
    except InvalidArgumentError as exc:
        raise GraphTextError(str(exc)) from exc


def read_graph_text(stream: TextIO | Iterable[str]) -> BipartiteGraph:
    if hasattr(stream, "read"):
        return parse_graph_text(stream.read())
    return parse_graph_text("\n".join(stream))
