"""Tiled multiply of a four-factor chain matrix with a dense matrix.

The kernel computes O = W x I where W is an `RcubsMatrix` over the chain
(g_o, g_r, g_i, g_b) with g_r and g_b complete. It preserves the three-level
blocking of the pattern on a CPU worker pool:

* Each (TM x TN) output tile is one work item; TM, TK are the sizes of the
  tile graph g_r (x) g_i (x) g_b, so W splits into (TM x TK) tiles that are
  either entirely zero or carry the cloned in-tile pattern. Per tile the
  kernel walks only g_o's adjacency row, skipping zero tiles outright.
* Per step, the W tile and the matching I tile are copied into per-worker
  tile buffers (the fast scratch level of the hierarchy).
* Inside a tile, rows fall into |g_i.U| repetition groups of RM*BM rows
  sharing one column set, so (BM x BK) micro-blocks of W and (BK x BN)
  micro-blocks of I are loaded into fixed-size register-block accumulators
  and reused across the RN output strides and RM row strides.

Workers own disjoint output tiles and the in-tile accumulation order is
fixed (outer step, then rk/ink, then rm/rn), so results are bit-identical
for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import ConfigurationError, ShapeError, UnsupportedChainError
from .products import Rbgp4Config, RbgpChain
from .rcubs import CsrMatrix, RcubsMatrix

DEFAULT_TN = 128
DEFAULT_RN = 1
DEFAULT_BN = 32


@dataclass(frozen=True)
class TilingParams:
    """Tile and micro-block dimensions steering the multiply kernel.

    (tm, tk) is the W tile; (rm, rk) and (bm, bk) come from the complete
    factors g_r and g_b; tn/rn/bn tile the output columns and are free
    performance knobs.
    """

    tm: int
    tk: int
    tn: int
    rm: int
    rk: int
    bm: int
    bk: int
    rn: int
    bn: int
    workers: int = 1


@dataclass(frozen=True)
class WorkReport:
    """Exact work accounting for one multiply."""

    fma_count: int
    tiles: int
    steps_per_tile: int
    steps_skipped_per_tile: int
    w_bytes_read: int
    i_bytes_read: int

    @property
    def total_steps_executed(self) -> int:
        return self.tiles * self.steps_per_tile

    @property
    def total_steps_skipped(self) -> int:
        return self.tiles * self.steps_skipped_per_tile

    def to_dict(self) -> dict:
        return {
            "fma_count": self.fma_count,
            "tiles": self.tiles,
            "steps_per_tile": self.steps_per_tile,
            "steps_skipped_per_tile": self.steps_skipped_per_tile,
            "total_steps_executed": self.total_steps_executed,
            "total_steps_skipped": self.total_steps_skipped,
            "w_bytes_read": self.w_bytes_read,
            "i_bytes_read": self.i_bytes_read,
        }


def tiling_for_chain(
    chain: RbgpChain,
    tn: int = DEFAULT_TN,
    rn: int = DEFAULT_RN,
    bn: int = DEFAULT_BN,
    workers: int = 1,
) -> TilingParams:
    """Tiling parameters for a four-factor chain, checking structure only.

    Collects every violated constraint before raising, so a bad
    configuration reports all its problems at once.
    """
    if chain.k != 4:
        raise UnsupportedChainError(
            f"tiled multiply needs a 4-factor chain, got {chain.k}"
        )
    g_o, g_r, g_i, g_b = chain.graphs
    violations = []
    for name, g in (("second", g_r), ("fourth", g_b)):
        if not g.is_complete():
            violations.append(f"{name} factor must be complete for row repetition")
    for name, v in (("tn", tn), ("rn", rn), ("bn", bn), ("workers", workers)):
        if v < 1:
            violations.append(f"{name} must be positive, got {v}")
    if tn >= 1 and rn >= 1 and bn >= 1 and tn % (rn * bn):
        violations.append(f"tn={tn} is not divisible by rn*bn={rn * bn}")
    if violations:
        raise ConfigurationError(violations)
    rm, rk = g_r.num_left, g_r.num_right
    bm, bk = g_b.num_left, g_b.num_right
    return TilingParams(
        tm=rm * g_i.num_left * bm,
        tk=rk * g_i.num_right * bk,
        tn=tn,
        rm=rm,
        rk=rk,
        bm=bm,
        bk=bk,
        rn=rn,
        bn=bn,
        workers=workers,
    )


def derive_tiling(
    config: Rbgp4Config,
    tn: int = DEFAULT_TN,
    rn: int = DEFAULT_RN,
    bn: int = DEFAULT_BN,
    workers: int = 1,
) -> TilingParams:
    """Tiling parameters for a certified four-factor configuration."""
    return tiling_for_chain(config.to_chain(), tn=tn, rn=rn, bn=bn, workers=workers)


@njit(nogil=True)
def _tile_worker(values, adj_o, adj_i, inp, out, tm, tk, tn, rm_, rk_, bm_, bk_,
                 rn_, bn_, n_ui, n_vi, d_i, start, stride):
    """Compute every `stride`-th output tile starting at tile `start`.

    Tiles are numbered row-major over the (rows/tm, cols/tn) grid. Each tile
    is accumulated in a private buffer and written back once, so concurrent
    workers never touch the same output element.
    """
    d_o = adj_o.shape[1]
    d_t = rk_ * d_i * bk_
    n_tile_cols = out.shape[1] // tn
    n_tiles = (out.shape[0] // tm) * n_tile_cols
    strides_n = tn // (rn_ * bn_)
    col_stride = tn // rn_
    wbuf = np.empty((tm, d_t), dtype=values.dtype)
    ibuf = np.empty((tk, tn), dtype=values.dtype)
    acc = np.empty((tm, tn), dtype=values.dtype)
    creg = np.empty((rm_ * bm_, rn_ * bn_), dtype=values.dtype)
    for tile in range(start, n_tiles, stride):
        tbm = tile // n_tile_cols
        tbn = tile % n_tile_cols
        acc[:, :] = 0.0
        for s in range(d_o):
            # tile loads into the per-worker buffers
            oind = adj_o[tbm, s]
            wbuf[:, :] = values[tbm * tm : (tbm + 1) * tm, s * d_t : (s + 1) * d_t]
            ibuf[:, :] = inp[oind * tk : (oind + 1) * tk, tbn * tn : (tbn + 1) * tn]
            for ui in range(n_ui):
                for thn in range(strides_n):
                    creg[:, :] = 0.0
                    for rk in range(rk_):
                        for ink in range(d_i):
                            # micro-block coordinates: W column (rk, ink, *)
                            # pairs with I row block (rk, adj_i[ui, ink], *)
                            wcol = (rk * d_i + ink) * bk_
                            kbase = (rk * n_vi + adj_i[ui, ink]) * bk_
                            for rm in range(rm_):
                                rbase = (rm * n_ui + ui) * bm_
                                for m in range(bm_):
                                    for k in range(bk_):
                                        a = wbuf[rbase + m, wcol + k]
                                        for rn in range(rn_):
                                            cbase = rn * col_stride + thn * bn_
                                            for n in range(bn_):
                                                creg[rm * bm_ + m, rn * bn_ + n] += (
                                                    a * ibuf[kbase + k, cbase + n]
                                                )
                    for rm in range(rm_):
                        rbase = (rm * n_ui + ui) * bm_
                        for m in range(bm_):
                            for rn in range(rn_):
                                cbase = rn * col_stride + thn * bn_
                                for n in range(bn_):
                                    acc[rbase + m, cbase + n] += creg[
                                        rm * bm_ + m, rn * bn_ + n
                                    ]
        out[tbm * tm : (tbm + 1) * tm, tbn * tn : (tbn + 1) * tn] = acc


def _check_params(w: RcubsMatrix, params: TilingParams) -> None:
    g_o, g_r, g_i, g_b = w.chain.graphs
    expected = {
        "rm": g_r.num_left,
        "rk": g_r.num_right,
        "bm": g_b.num_left,
        "bk": g_b.num_right,
        "tm": g_r.num_left * g_i.num_left * g_b.num_left,
        "tk": g_r.num_right * g_i.num_right * g_b.num_right,
    }
    violations = [
        f"{name}={getattr(params, name)} inconsistent with chain (expected {want})"
        for name, want in expected.items()
        if getattr(params, name) != want
    ]
    if params.tn < 1 or params.rn < 1 or params.bn < 1:
        violations.append("tn, rn, bn must be positive")
    elif params.tn % (params.rn * params.bn):
        violations.append(
            f"tn={params.tn} is not divisible by rn*bn={params.rn * params.bn}"
        )
    if params.workers < 1:
        violations.append(f"workers must be positive, got {params.workers}")
    if violations:
        raise ConfigurationError(violations)


def rbgp4mm(
    w: RcubsMatrix, inp: np.ndarray, params: TilingParams
) -> tuple[np.ndarray, WorkReport]:
    """O = W x I with tile skipping and row-repetition reuse.

    `inp` must have W.cols rows, W's dtype, and a column count divisible by
    params.tn. The result is bit-identical for any worker count.
    """
    if w.chain.k != 4:
        raise UnsupportedChainError(
            f"tiled multiply needs a 4-factor chain, got {w.chain.k}; "
            "use sdmm_reference for general chains"
        )
    _check_params(w, params)
    inp = np.asarray(inp)
    if inp.ndim != 2 or inp.shape[0] != w.cols:
        raise ShapeError(
            f"input shape {inp.shape} incompatible with W of shape "
            f"({w.rows}, {w.cols})"
        )
    if inp.dtype != w.dtype:
        raise ShapeError(f"input dtype {inp.dtype} != matrix dtype {w.dtype}")
    n_cols = inp.shape[1]
    if n_cols % params.tn:
        raise ConfigurationError(
            [f"input columns {n_cols} not divisible by tn={params.tn}"]
        )
    g_o, _, g_i, _ = w.chain.graphs
    adj_o = g_o.adjacency_array()
    adj_i = g_i.adjacency_array()
    inp = np.ascontiguousarray(inp)
    out = np.zeros((w.rows, n_cols), dtype=w.dtype)
    workers = params.workers
    args = (
        w.values, adj_o, adj_i, inp, out,
        params.tm, params.tk, params.tn, params.rm, params.rk,
        params.bm, params.bk, params.rn, params.bn,
        g_i.num_left, g_i.num_right, adj_i.shape[1],
    )
    if workers == 1:
        _tile_worker(*args, 0, 1)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_tile_worker, *args, wid, workers)
                for wid in range(workers)
            ]
            for f in futures:
                f.result()
    n_tiles = (w.rows // params.tm) * (n_cols // params.tn)
    report = WorkReport(
        fma_count=w.nnz * n_cols,
        tiles=n_tiles,
        steps_per_tile=adj_o.shape[1],
        steps_skipped_per_tile=w.cols // params.tk - adj_o.shape[1],
        w_bytes_read=w.nnz * (n_cols // params.tn) * w.dtype.itemsize,
        i_bytes_read=n_tiles * adj_o.shape[1] * params.tk * params.tn
        * w.dtype.itemsize,
    )
    return out, report


@njit(nogil=True)
def _csr_rows(indptr, indices, values, inp, out):
    for i in range(out.shape[0]):
        for p in range(indptr[i], indptr[i + 1]):
            v = values[p]
            c = indices[p]
            for j in range(inp.shape[1]):
                out[i, j] += v * inp[c, j]


def sdmm_reference(w: RcubsMatrix | CsrMatrix, inp: np.ndarray) -> np.ndarray:
    """Naive row-wise sparse multiply; the single-threaded oracle and baseline.

    Accepts either a chain matrix or a raw CSR triple; accumulation is in
    row-major nonzero order, deterministic by construction.
    """
    csr = w.to_unstructured() if isinstance(w, RcubsMatrix) else w
    rows, cols = csr.shape
    inp = np.asarray(inp)
    if inp.ndim != 2 or inp.shape[0] != cols:
        raise ShapeError(
            f"input shape {inp.shape} incompatible with W of shape ({rows}, {cols})"
        )
    if inp.dtype != csr.values.dtype:
        raise ShapeError(f"input dtype {inp.dtype} != matrix dtype {csr.values.dtype}")
    out = np.zeros((rows, inp.shape[1]), dtype=csr.values.dtype)
    _csr_rows(
        np.ascontiguousarray(csr.indptr),
        np.ascontiguousarray(csr.indices),
        np.ascontiguousarray(csr.values),
        np.ascontiguousarray(inp),
        out,
    )
    return out


def dense_gemm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense multiply baseline (BLAS-backed, multi-threaded)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def with_workers(params: TilingParams, workers: int) -> TilingParams:
    """Copy of `params` with a different worker count."""
    return replace(params, workers=workers)
