"""Benchmark sweeps for the tiled multiply against dense and CSR baselines.

Each sweep row builds a four-factor chain matrix of a given shape and
sparsity split, times the tiled kernel over warm runs, and reports the
median together with exact work accounting and speedups versus a dense
BLAS multiply and the naive row-wise CSR multiply. Reported dimensions
follow O = W x I: `rows` is W's row count, `cols` is the output column
count, and `inner` is the contracted dimension (W's columns).

Per-row failures (an infeasible factor, an indivisible tiling) are recorded
in the row's `error` field and do not abort the sweep.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import median

import numpy as np

from .errors import KronsparseError
from .generate import LiftChainSpec, generate_ramanujan, make_rng
from .graphs import BipartiteGraph, complete_graph
from .products import RbgpChain, combined_sparsity
from .rcubs import init_random
from .sdmm import (
    DEFAULT_BN,
    DEFAULT_RN,
    DEFAULT_TN,
    dense_gemm,
    rbgp4mm,
    sdmm_reference,
    tiling_for_chain,
)

#: Baselines are timed over fewer repetitions than the kernel; they exist to
#: anchor speedup columns, not to be measured precisely.
BASELINE_RUNS = 3


@dataclass(frozen=True)
class SweepConfig:
    """One benchmark row: factor shapes, sparsity split, tiling, run counts."""

    config_id: str
    g_o: tuple[int, int]
    sp_o: float
    g_r: tuple[int, int]
    g_i: tuple[int, int]
    sp_i: float
    g_b: tuple[int, int]
    n_cols: int
    tn: int = DEFAULT_TN
    rn: int = DEFAULT_RN
    bn: int = DEFAULT_BN
    workers: int = 4
    precision: str = "f32"
    runs: int = 5
    warmup: int = 2
    seed: int = 0


@dataclass
class BenchRow:
    config_id: str
    rows: int = 0
    cols: int = 0
    inner: int = 0
    sp_total: float = 0.0
    sp_o: float = 0.0
    sp_i: float = 0.0
    rm: int = 0
    bm: int = 0
    tn: int = 0
    rn: int = 0
    bn: int = 0
    workers: int = 0
    median_ms: float = 0.0
    speedup_vs_dense: float = 0.0
    speedup_vs_unstructured: float = 0.0
    fma_count: int = 0
    steps_skipped: int = 0
    max_rel_error: float = 0.0
    error: str = ""


CSV_COLUMNS = [
    "config_id", "rows", "cols", "inner", "sp_total", "sp_o", "sp_i",
    "RM", "BM", "TN", "RN", "BN", "workers", "median_ms",
    "speedup_vs_dense", "speedup_vs_unstructured", "fma_count",
    "steps_skipped", "max_rel_error", "error",
]


def _factor(shape: tuple[int, int], sparsity: float, seed: int) -> BipartiteGraph:
    if sparsity == 0.0:
        return complete_graph(*shape)
    spec = LiftChainSpec(shape[0], shape[1], sparsity, rng_seed=seed)
    return generate_ramanujan(spec).graph


def build_chain(cfg: SweepConfig) -> RbgpChain:
    seeds = np.random.SeedSequence(cfg.seed).generate_state(2)
    return RbgpChain(
        (
            _factor(cfg.g_o, cfg.sp_o, int(seeds[0])),
            complete_graph(*cfg.g_r),
            _factor(cfg.g_i, cfg.sp_i, int(seeds[1])),
            complete_graph(*cfg.g_b),
        )
    )


def _timed(fn, runs: int, warmup: int) -> float:
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return median(samples) * 1e3


def run_config(cfg: SweepConfig) -> BenchRow:
    row = BenchRow(config_id=cfg.config_id, sp_o=cfg.sp_o, sp_i=cfg.sp_i,
                   sp_total=combined_sparsity(cfg.sp_o, cfg.sp_i),
                   tn=cfg.tn, rn=cfg.rn, bn=cfg.bn, workers=cfg.workers)
    try:
        chain = build_chain(cfg)
        params = tiling_for_chain(
            chain, tn=cfg.tn, rn=cfg.rn, bn=cfg.bn, workers=cfg.workers
        )
        rng = make_rng(np.random.SeedSequence([cfg.seed, 1]).generate_state(1)[0])
        w = init_random(chain, rng, precision=cfg.precision)
        inp = rng.uniform(-1.0, 1.0, size=(w.cols, cfg.n_cols)).astype(w.dtype)
        row.rows, row.cols, row.inner = w.rows, cfg.n_cols, w.cols
        row.rm, row.bm = params.rm, params.bm

        out, report = rbgp4mm(w, inp, params)
        row.fma_count = report.fma_count
        row.steps_skipped = report.total_steps_skipped
        row.median_ms = _timed(lambda: rbgp4mm(w, inp, params), cfg.runs, cfg.warmup)

        reference = sdmm_reference(w, inp)
        scale = np.max(np.abs(reference))
        row.max_rel_error = float(np.max(np.abs(out - reference)) / scale) if scale else 0.0
        ref_ms = _timed(
            lambda: sdmm_reference(w, inp), min(cfg.runs, BASELINE_RUNS), 1
        )
        dense_w = w.to_dense()
        dense_ms = _timed(
            lambda: dense_gemm(dense_w, inp), min(cfg.runs, BASELINE_RUNS), 1
        )
        row.speedup_vs_dense = dense_ms / row.median_ms
        row.speedup_vs_unstructured = ref_ms / row.median_ms
    except KronsparseError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(configs: list[SweepConfig]) -> list[BenchRow]:
    return [run_config(cfg) for cfg in configs]


def write_csv(rows: list[BenchRow], path: Path | str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([
                r.config_id, r.rows, r.cols, r.inner,
                f"{r.sp_total * 100:.2f}", f"{r.sp_o * 100:.2f}",
                f"{r.sp_i * 100:.2f}", r.rm, r.bm, r.tn, r.rn, r.bn,
                r.workers, f"{r.median_ms:.3f}", f"{r.speedup_vs_dense:.3f}",
                f"{r.speedup_vs_unstructured:.3f}", r.fma_count,
                r.steps_skipped, f"{r.max_rel_error:.3e}", r.error,
            ])


def write_json(rows: list[BenchRow], path: Path | str) -> None:
    with open(path, "w") as fh:
        json.dump([asdict(r) for r in rows], fh, indent=2)
        fh.write("\n")


# -- bundled presets -----------------------------------------------------------
#
# Desk scale runs the 1024x1024x1024 problem; full scale runs 4096x4096x4096.
# Factor shapes are chosen so that every sparsity split in the preset admits
# a certified factor (each sparse factor keeps both degrees >= 2).

SPARSITY_SPLITS = {
    0.75: [(0.0, 0.75), (0.5, 0.5)],
    0.875: [(0.0, 0.875), (0.5, 0.75), (0.75, 0.5)],
    0.9375: [(0.0, 0.9375), (0.5, 0.875), (0.75, 0.75), (0.875, 0.5)],
}

REPETITION_SHAPES = [
    ((1, 1), (1, 1)),
    ((2, 1), (1, 1)),
    ((4, 1), (1, 1)),
    ((1, 1), (2, 1)),
    ((1, 1), (4, 1)),
    ((2, 1), (2, 1)),
]


def sparsity_distribution_preset(
    scale: str = "desk", workers: int = 4, runs: int = 5, precision: str = "f32",
    seed: int = 0,
) -> list[SweepConfig]:
    """Sweep sparsity splits between the outer and inner factor.

    Total sparsity is fixed per group while (sp_o, sp_i) varies; work is
    identical within a group, so timing differences isolate the effect of
    tile-level skipping.
    """
    if scale == "desk":
        g_o, g_r, g_i, g_b, n = (16, 32), (2, 1), (32, 32), (1, 1), 1024
    elif scale == "full":
        g_o, g_r, g_i, g_b, n = (32, 128), (4, 1), (32, 32), (1, 1), 4096
    else:
        raise ValueError(f"unknown scale {scale!r}")
    configs = []
    for total, splits in SPARSITY_SPLITS.items():
        for sp_o, sp_i in splits:
            configs.append(SweepConfig(
                config_id=f"split-{total * 100:.2f}-o{sp_o * 100:g}-i{sp_i * 100:g}",
                g_o=g_o, sp_o=sp_o, g_r=g_r, g_i=g_i, sp_i=sp_i, g_b=g_b,
                n_cols=n, workers=workers, runs=runs, precision=precision,
                seed=seed,
            ))
    return configs


def row_repetition_preset(
    scale: str = "desk", workers: int = 4, runs: int = 5, precision: str = "f32",
    seed: int = 0,
) -> list[SweepConfig]:
    """Sweep row-repetition group sizes at a fixed (128, 32) tile graph.

    The complete factors vary from none to 4-way repetition while the tile
    size and the outer sparsity (50%) stay fixed, so timing differences
    isolate the effect of micro-block data reuse.
    """
    if scale == "desk":
        g_o, n = (8, 32), 1024
    elif scale == "full":
        g_o, n = (32, 128), 4096
    else:
        raise ValueError(f"unknown scale {scale!r}")
    tile_u, tile_v = 128, 32
    configs = []
    for g_r, g_b in REPETITION_SHAPES:
        gi_u = tile_u // (g_r[0] * g_b[0])
        gi_v = tile_v // (g_r[1] * g_b[1])
        for total in (0.75, 0.875, 0.9375):
            sp_i = 1.0 - (1.0 - total) / 0.5
            configs.append(SweepConfig(
                config_id=(
                    f"rep-r{g_r[0]}x{g_r[1]}-b{g_b[0]}x{g_b[1]}-{total * 100:.2f}"
                ),
                g_o=g_o, sp_o=0.5, g_r=g_r, g_i=(gi_u, gi_v), sp_i=sp_i,
                g_b=g_b, n_cols=n, workers=workers, runs=runs,
                precision=precision, seed=seed,
            ))
    return configs


PRESETS = {
    "sparsity-desk": lambda **kw: sparsity_distribution_preset("desk", **kw),
    "sparsity-full": lambda **kw: sparsity_distribution_preset("full", **kw),
    "repetition-desk": lambda **kw: row_repetition_preset("desk", **kw),
    "repetition-full": lambda **kw: row_repetition_preset("full", **kw),
}


def load_sweep_file(path: Path | str) -> list[SweepConfig]:
    """Sweep spec: a JSON list of objects with SweepConfig field names."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise KronsparseError("sweep file must contain a JSON list")
    configs = []
    for i, entry in enumerate(raw):
        entry = dict(entry)
        entry.setdefault("config_id", f"row-{i}")
        for key in ("g_o", "g_r", "g_i", "g_b"):
            if key in entry:
                entry[key] = tuple(entry[key])
        configs.append(SweepConfig(**entry))
    return configs
