"""Compressed storage for matrices patterned by a chain of graph products.

The entire index structure of such a matrix is its chain of base graphs:
every product row has exactly `row_nnz` nonzeros whose column indices are
enumerated on the fly from the base adjacency lists, so only a dense values
array of shape (rows, row_nnz) is stored. Values are laid out per row in
sorted-column order, the one canonical order shared by the CSR export and
the multiply kernel.

On-pattern zeros are stored explicitly: the pattern is fixed up front and
must not depend on value zeroness.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumMismatchError,
    InvalidArgumentError,
    KronsparseError,
    PatternViolationError,
    PrecisionMismatchError,
    SerializationError,
    ShapeError,
    TruncatedStreamError,
)
from .generate import make_rng
from .graphs import BipartiteGraph
from .products import RbgpChain

MAGIC = b"RBGP"
FORMAT_VERSION = 1

_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}
_PRECISION_NAMES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def _as_dtype(precision) -> np.dtype:
    """Accept 'f32'/'f64', numpy dtypes, or None (defaults to f64)."""
    if precision is None:
        return np.dtype("<f8")
    if isinstance(precision, str) and precision in _PRECISION_NAMES:
        return _PRECISION_NAMES[precision]
    dt = np.dtype(precision)
    if dt.itemsize not in _DTYPES or dt.kind != "f":
        raise InvalidArgumentError(f"unsupported value precision {precision!r}")
    return _DTYPES[dt.itemsize]


def neighbors(chain: RbgpChain, u: int) -> np.ndarray:
    """Sorted column indices of product row `u`, without materializing.

    Decomposes `u` in row-major mixed radix over the factor left sizes, then
    composes the cross product of the per-factor neighbor lists in mixed
    radix over the factor right sizes. Length is always `chain.row_nnz`.
    """
    if not 0 <= u < chain.num_left:
        raise IndexError(f"row {u} out of range [0, {chain.num_left})")
    digits = []
    rem = u
    for g in reversed(chain.graphs):
        rem, digit = divmod(rem, g.num_left)
        digits.append(digit)
    digits.reverse()
    cols = np.zeros(1, dtype=np.int64)
    for g, digit in zip(chain.graphs, digits):
        row = np.asarray(g.adjacency[digit], dtype=np.int64)
        cols = (cols[:, None] * g.num_right + row[None, :]).ravel()
    return cols


@dataclass(frozen=True)
class RcubsMatrix:
    """Values array plus the chain that defines where those values live."""

    chain: RbgpChain
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values)
        if vals.dtype.itemsize not in _DTYPES or vals.dtype.kind != "f":
            raise InvalidArgumentError(f"unsupported values dtype {vals.dtype}")
        expected = (self.chain.num_left, self.chain.row_nnz)
        if vals.shape != expected:
            raise ShapeError(f"values shape {vals.shape}, chain expects {expected}")
        vals = vals.astype(_DTYPES[vals.dtype.itemsize], copy=False)
        if vals.flags.writeable:
            # private read-only copy; callers keep their array untouched
            vals = vals.copy()
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def rows(self) -> int:
        return self.chain.num_left

    @property
    def cols(self) -> int:
        return self.chain.num_right

    @property
    def row_nnz(self) -> int:
        return self.chain.row_nnz

    @property
    def nnz(self) -> int:
        return self.rows * self.row_nnz

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    @property
    def precision(self) -> str:
        return "f32" if self.dtype.itemsize == 4 else "f64"

    @classmethod
    def from_dense(cls, dense: np.ndarray, chain: RbgpChain) -> "RcubsMatrix":
        """Gather a dense matrix into chain storage.

        Every nonzero of `dense` must lie on the chain's pattern; on-pattern
        zeros are kept as stored zeros.
        """
        dense = np.asarray(dense)
        if dense.shape != (chain.num_left, chain.num_right):
            raise ShapeError(
                f"dense shape {dense.shape}, chain expects "
                f"({chain.num_left}, {chain.num_right})"
            )
        dtype = _DTYPES.get(dense.dtype.itemsize, np.dtype("<f8"))
        if dense.dtype.kind != "f":
            dtype = np.dtype("<f8")
        values = np.empty((chain.num_left, chain.row_nnz), dtype=dtype)
        for u in range(chain.num_left):
            idx = neighbors(chain, u)
            row = np.asarray(dense[u], dtype=dtype).copy()
            values[u] = row[idx]
            row[idx] = 0
            off = np.flatnonzero(row)
            if off.size:
                raise PatternViolationError(u, int(off[0]), dense[u, off[0]])
        return cls(chain=chain, values=values)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=self.dtype)
        for u in range(self.rows):
            out[u, neighbors(self.chain, u)] = self.values[u]
        return out

    def to_unstructured(self) -> "CsrMatrix":
        """Canonical CSR triple with sorted columns in every row."""
        indptr = np.arange(self.rows + 1, dtype=np.int64) * self.row_nnz
        indices = np.empty(self.nnz, dtype=np.int32)
        for u in range(self.rows):
            indices[u * self.row_nnz : (u + 1) * self.row_nnz] = neighbors(
                self.chain, u
            )
        return CsrMatrix(
            indptr=indptr,
            indices=indices,
            values=self.values.reshape(-1),
            shape=(self.rows, self.cols),
        )

    def to_bytes(self) -> bytes:
        return serialize(self)

    @classmethod
    def from_bytes(cls, data: bytes, precision=None) -> "RcubsMatrix":
        return deserialize(data, precision=precision)


class CsrMatrix(NamedTuple):
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    shape: tuple[int, int]


@dataclass(frozen=True)
class MemoryFootprint:
    """Byte accounting for one stored matrix versus the obvious baselines."""

    value_bytes: int
    index_bytes: int
    dense_equivalent_bytes: int
    unstructured_equivalent_bytes: int
    index_reduction_ratio: float

    def to_dict(self) -> dict:
        return {
            "value_bytes": self.value_bytes,
            "index_bytes": self.index_bytes,
            "dense_equivalent_bytes": self.dense_equivalent_bytes,
            "unstructured_equivalent_bytes": self.unstructured_equivalent_bytes,
            "index_reduction_ratio": self.index_reduction_ratio,
        }


def memory_footprint(
    m: RcubsMatrix, value_width: int | None = None, index_width: int = 4
) -> MemoryFootprint:
    """Bytes for values and base-graph indices, with dense and CSR baselines.

    An unstructured sparse baseline needs one stored value and one stored
    index per edge; the chain needs indices only for the base graphs' edges,
    giving an index reduction of full edges over stored edges.
    """
    if value_width is None:
        value_width = m.dtype.itemsize
    stored = m.chain.stored_edges
    return MemoryFootprint(
        value_bytes=m.nnz * value_width,
        index_bytes=stored * index_width,
        dense_equivalent_bytes=m.rows * m.cols * value_width,
        unstructured_equivalent_bytes=m.nnz * (value_width + index_width),
        index_reduction_ratio=m.nnz / stored,
    )


def init_random(
    chain: RbgpChain,
    rng: int | np.random.Generator,
    scale: float = 1.0,
    precision="f64",
) -> RcubsMatrix:
    """Fan-in scaled uniform values: i.i.d. on [-scale/sqrt(row_nnz), +...]."""
    if not scale > 0:
        raise InvalidArgumentError(f"scale must be positive, got {scale}")
    rng = make_rng(rng)
    dtype = _as_dtype(precision)
    bound = scale * (1.0 / chain.row_nnz) ** 0.5
    values = rng.uniform(-bound, bound, size=(chain.num_left, chain.row_nnz))
    return RcubsMatrix(chain=chain, values=values.astype(dtype))


# -- binary format -------------------------------------------------------------
#
# All integers little-endian. Layout:
#   magic "RBGP" | version u8 | value itemsize u8 (4 or 8) | K u32
#   per factor: num_left u32, num_right u32, d_left u32,
#               adjacency (num_left * d_left) u32, row-major
#   values (rows * row_nnz) f32/f64, row-major
#   checksum u64: blake2b-64 of every preceding byte
#
# Roles are not part of the stream; on load a factor is tagged complete
# exactly when it is a full bipartite graph. That distinction never changes
# the stored pattern or values.


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def serialize(m: RcubsMatrix) -> bytes:
    parts = [MAGIC, struct.pack("<BBI", FORMAT_VERSION, m.dtype.itemsize, m.chain.k)]
    for g in m.chain.graphs:
        d_left = len(g.adjacency[0])
        parts.append(struct.pack("<III", g.num_left, g.num_right, d_left))
        adj = np.array(g.adjacency, dtype="<u4")
        parts.append(adj.tobytes())
    parts.append(np.ascontiguousarray(m.values).tobytes())
    body = b"".join(parts)
    return body + _checksum(body)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedStreamError(
                f"stream ended inside {what}: needed {n} bytes at offset {self.pos}, "
                f"have {len(self.data) - self.pos}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out


def deserialize(data: bytes, precision=None) -> RcubsMatrix:
    """Parse a serialized matrix; see the format comment above.

    If `precision` is given ('f32'/'f64' or a float dtype), a stream stored
    at a different precision is rejected rather than converted.
    """
    cur = _Cursor(bytes(data))
    if cur.take(4, "magic") != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, itemsize, k = struct.unpack("<BBI", cur.take(6, "header"))
    if version != FORMAT_VERSION:
        raise SerializationError(f"unsupported format version {version}")
    if itemsize not in _DTYPES:
        raise SerializationError(f"unsupported value itemsize {itemsize}")
    dtype = _DTYPES[itemsize]
    if precision is not None and _as_dtype(precision) != dtype:
        raise PrecisionMismatchError(
            f"stream stores {_DTYPES[itemsize]} values, caller required "
            f"{_as_dtype(precision)}"
        )
    if k == 0 or k > 64:
        raise SerializationError(f"implausible factor count {k}")
    graphs = []
    for i in range(k):
        num_left, num_right, d_left = struct.unpack(
            "<III", cur.take(12, f"factor {i} header")
        )
        raw = cur.take(4 * num_left * d_left, f"factor {i} adjacency")
        adj = np.frombuffer(raw, dtype="<u4").reshape(num_left, d_left)
        try:
            graphs.append(
                BipartiteGraph(
                    num_left,
                    num_right,
                    tuple(tuple(int(v) for v in row) for row in adj),
                )
            )
        except KronsparseError as exc:
            raise SerializationError(f"factor {i} is not a valid graph: {exc}") from exc
    try:
        chain = RbgpChain(tuple(graphs))
    except KronsparseError as exc:
        raise SerializationError(f"stored factors form no valid chain: {exc}") from exc
    n_values = chain.num_left * chain.row_nnz
    raw = cur.take(itemsize * n_values, "values")
    values = np.frombuffer(raw, dtype=dtype).reshape(chain.num_left, chain.row_nnz)
    stored_sum = cur.take(8, "checksum")
    if cur.pos != len(cur.data):
        raise SerializationError(
            f"{len(cur.data) - cur.pos} unexpected trailing bytes"
        )
    if _checksum(cur.data[: len(cur.data) - 8]) != stored_sum:
        raise ChecksumMismatchError("checksum mismatch: stream is corrupted")
    return RcubsMatrix(chain=chain, values=values)
