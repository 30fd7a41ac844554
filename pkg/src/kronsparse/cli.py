"""Command-line interface.

Reports go to stdout as JSON; progress and diagnostics go to stderr so
pipelines stay clean. Exit codes: 0 success, 1 domain failure (failed
certificate, failed verification, incompatible shapes), 2 usage or parse
failure. Commands taking a seed are byte-reproducible in their primary
output artifact.
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import bench as bench_mod
from .errors import (
    ChainFileError,
    GenerationExhaustedError,
    GraphTextError,
    KronsparseError,
    SerializationError,
)
from .generate import LiftChainSpec, generate_ramanujan, make_rng
from .graphs import check_ramanujan, graph_to_text, parse_graph_text
from .products import (
    blocking_levels,
    compressed_edge_count,
    parse_chain_file,
    resolve_chain,
)
from .rcubs import RcubsMatrix, init_random, memory_footprint
from .sdmm import (
    DEFAULT_BN,
    DEFAULT_RN,
    DEFAULT_TN,
    rbgp4mm,
    sdmm_reference,
    tiling_for_chain,
)

WORKERS_ENV = "KRONSPARSE_WORKERS"

_PARSE_ERRORS = (GraphTextError, ChainFileError, SerializationError)


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _info(message: str) -> None:
    click.echo(message, err=True)


def _dims(value: str) -> tuple[int, int]:
    try:
        left, right = value.lower().split("x")
        return int(left), int(right)
    except ValueError:
        raise click.BadParameter(f"expected LxR, e.g. 64x64, got {value!r}")


def _handle(exc: KronsparseError) -> None:
    _info(f"error: {exc}")
    sys.exit(2 if isinstance(exc, _PARSE_ERRORS) else 1)


@click.group()
def main():
    """Structured sparse matrices from bipartite graph products."""


@main.command("gen-graph")
@click.option("--dims", required=True, help="Target size as LxR, e.g. 64x64.")
@click.option("--sparsity", type=float, required=True,
              help="Fraction of absent edges; 1/(1-sparsity) must be a power of 2.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-attempts", type=int, default=1000, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Graph text output path; a JSON sidecar is written next to it.")
def gen_graph(dims, sparsity, seed, max_attempts, out):
    """Sample a certified sparse biregular graph and write it to a file."""
    left, right = _dims(dims)
    try:
        spec = LiftChainSpec(left, right, sparsity, rng_seed=seed,
                             max_attempts=max_attempts)
        result = generate_ramanujan(spec)
    except GenerationExhaustedError as exc:
        _info(f"error: {exc}")
        sys.exit(1)
    except KronsparseError as exc:
        _handle(exc)
    Path(out).write_text(graph_to_text(result.graph))
    sidecar = {
        "lambda1": result.report.sigma1,
        "lambda2": result.report.sigma2,
        "bound": result.report.ramanujan_bound,
        "attempts": result.attempts,
        "seed": seed,
    }
    Path(str(out) + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )
    _info(f"wrote {out} ({left}x{right}, sparsity {sparsity}, "
          f"{result.attempts} attempt(s))")
    _emit(sidecar)


@main.command("check")
@click.argument("graph_file", type=click.Path(exists=True, dir_okay=False))
def check(graph_file):
    """Print the spectral report of a graph; exit 0 iff it is Ramanujan."""
    try:
        g = parse_graph_text(Path(graph_file).read_text())
        report = check_ramanujan(g)
    except KronsparseError as exc:
        _handle(exc)
    _emit(report.to_dict())
    sys.exit(0 if report.is_ramanujan else 1)


@main.command("build-chain")
@click.option("--chain", "chain_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Chain description file.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--precision", type=click.Choice(["f32", "f64"]), default="f64",
              show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Fan-in scale for the random values.")
@click.option("--max-attempts", type=int, default=1000, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Serialized matrix output path.")
def build_chain(chain_path, seed, precision, scale, max_attempts, out):
    """Build a chain matrix: generate/load factors, certify, store."""
    try:
        entries = parse_chain_file(Path(chain_path).read_text())
        chain = resolve_chain(entries, Path(chain_path).parent, seed=seed,
                              max_attempts=max_attempts)
        value_rng = make_rng(int(np.random.SeedSequence([seed, 0xBEEF])
                                 .generate_state(1)[0]))
        matrix = init_random(chain, value_rng, scale=scale, precision=precision)
    except KronsparseError as exc:
        _handle(exc)
    Path(out).write_bytes(matrix.to_bytes())
    levels = blocking_levels(chain)
    counts = compressed_edge_count(chain)
    footprint = memory_footprint(matrix)
    _info(f"wrote {out} ({matrix.rows}x{matrix.cols}, "
          f"{matrix.row_nnz} nonzeros/row, {matrix.precision})")
    _emit({
        "rows": matrix.rows,
        "cols": matrix.cols,
        "row_nnz": matrix.row_nnz,
        "sparsity": chain.sparsity,
        "precision": matrix.precision,
        "factors": [
            {"num_left": g.num_left, "num_right": g.num_right,
             "edges": g.num_edges, "role": role}
            for g, role in zip(chain.graphs, chain.roles)
        ],
        "blocking_levels": [list(level) for level in levels],
        "edge_counts": {
            "full": counts.full_edges,
            "stored": counts.stored_edges,
            "ratio": counts.ratio,
        },
        "memory": footprint.to_dict(),
    })


@main.command("multiply")
@click.option("--matrix", "matrix_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="Dense input as a .npy file.")
@click.option("--random", "random_cols", type=int,
              help="Use a seeded random input with this many columns instead.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=None,
              help=f"Worker threads (default: ${WORKERS_ENV} or 1).")
@click.option("--tn", type=int, default=DEFAULT_TN, show_default=True)
@click.option("--rn", type=int, default=DEFAULT_RN, show_default=True)
@click.option("--bn", type=int, default=DEFAULT_BN, show_default=True)
@click.option("--verify", is_flag=True,
              help="Also run the naive oracle and report the max error.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output .npy path.")
def multiply(matrix_path, input_path, random_cols, seed, workers, tn, rn, bn,
             verify, out):
    """Multiply a stored chain matrix with a dense input."""
    if (input_path is None) == (random_cols is None):
        raise click.UsageError("exactly one of --input / --random is required")
    workers = workers if workers is not None else _default_workers()
    try:
        matrix = RcubsMatrix.from_bytes(Path(matrix_path).read_bytes())
        if input_path is not None:
            inp = np.load(input_path)
            if inp.dtype != matrix.dtype:
                inp = inp.astype(matrix.dtype)
        else:
            inp = (make_rng(seed)
                   .uniform(-1.0, 1.0, size=(matrix.cols, random_cols))
                   .astype(matrix.dtype))
        payload = {"rows": matrix.rows, "cols": int(inp.shape[1]),
                   "inner": matrix.cols, "workers": workers}
        if matrix.chain.k == 4:
            params = tiling_for_chain(matrix.chain, tn=tn, rn=rn, bn=bn,
                                      workers=workers)
            t0 = time.perf_counter()
            result, report = rbgp4mm(matrix, inp, params)
            payload["elapsed_ms"] = (time.perf_counter() - t0) * 1e3
            payload["kernel"] = "tiled"
            payload["work"] = report.to_dict()
        else:
            t0 = time.perf_counter()
            result = sdmm_reference(matrix, inp)
            payload["elapsed_ms"] = (time.perf_counter() - t0) * 1e3
            payload["kernel"] = "reference"
        if verify:
            oracle = sdmm_reference(matrix, inp)
            max_abs = float(np.max(np.abs(result - oracle)))
            denom = float(np.max(np.abs(oracle)))
            payload["verify"] = {
                "max_abs_error": max_abs,
                "max_rel_error": max_abs / denom if denom else 0.0,
            }
    except KronsparseError as exc:
        _handle(exc)
    np.save(out, result)
    _info(f"wrote {out} ({result.shape[0]}x{result.shape[1]})")
    _emit(payload)


@main.command("bench")
@click.option("--sweep", "sweep_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON sweep file (list of config objects).")
@click.option("--preset", type=click.Choice(sorted(bench_mod.PRESETS)),
              help="Bundled sweep preset.")
@click.option("--workers", type=int, default=None)
@click.option("--runs", type=int, default=5, show_default=True)
@click.option("--precision", type=click.Choice(["f32", "f64"]), default="f32",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "both"]),
              default="both", show_default=True)
@click.option("--out", "out_base", required=True,
              help="Output base path; writes <base>.csv and/or <base>.json.")
def bench(sweep_path, preset, workers, runs, precision, seed, fmt, out_base):
    """Run a benchmark sweep and write CSV/JSON tables."""
    if (sweep_path is None) == (preset is None):
        raise click.UsageError("exactly one of --sweep / --preset is required")
    workers = workers if workers is not None else max(_default_workers(), 4)
    try:
        if preset is not None:
            configs = bench_mod.PRESETS[preset](
                workers=workers, runs=runs, precision=precision, seed=seed
            )
        else:
            configs = bench_mod.load_sweep_file(sweep_path)
    except (KronsparseError, json.JSONDecodeError, TypeError, ValueError) as exc:
        _info(f"error: cannot load sweep: {exc}")
        sys.exit(2)
    rows = []
    for cfg in configs:
        _info(f"running {cfg.config_id} ...")
        row = bench_mod.run_config(cfg)
        if row.error:
            _info(f"  failed: {row.error}")
        else:
            _info(f"  median {row.median_ms:.2f} ms")
        rows.append(row)
    if fmt in ("csv", "both"):
        bench_mod.write_csv(rows, f"{out_base}.csv")
        _info(f"wrote {out_base}.csv")
    if fmt in ("json", "both"):
        bench_mod.write_json(rows, f"{out_base}.json")
        _info(f"wrote {out_base}.json")


@main.command("convert")
@click.option("--src", "src_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Serialized matrix (binary) or chain file (for --to binary).")
@click.option("--to", "target", required=True,
              type=click.Choice(["text", "csr", "binary"]))
@click.option("--out", required=True, help="Output base path.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for values when converting a chain file to binary.")
@click.option("--precision", type=click.Choice(["f32", "f64"]), default="f64",
              show_default=True)
def convert(src_path, target, out, seed, precision):
    """Convert between the binary format, graph text + CSV, and CSR dumps.

    binary -> text writes <out>.g<K>.txt per factor, <out>.values.csv and a
    <out>.chain manifest; binary -> csr writes a .npz with indptr/indices/
    values/shape; a chain file -> binary builds and stores the matrix.
    """
    src = Path(src_path)
    try:
        if target == "binary":
            entries = parse_chain_file(src.read_text())
            chain = resolve_chain(entries, src.parent, seed=seed)
            rng = make_rng(int(np.random.SeedSequence([seed, 0xBEEF])
                               .generate_state(1)[0]))
            matrix = init_random(chain, rng, precision=precision)
            Path(out).write_bytes(matrix.to_bytes())
            _info(f"wrote {out}")
            return
        matrix = RcubsMatrix.from_bytes(src.read_bytes())
        if target == "csr":
            csr = matrix.to_unstructured()
            np.savez(out, indptr=csr.indptr, indices=csr.indices,
                     values=csr.values, shape=np.array(csr.shape))
            _info(f"wrote {out}.npz")
        else:
            manifest = []
            for i, g in enumerate(matrix.chain.graphs):
                gpath = f"{out}.g{i}.txt"
                Path(gpath).write_text(graph_to_text(g))
                role = matrix.chain.roles[i]
                if role == "complete":
                    manifest.append(f"complete {g.num_left} {g.num_right}")
                else:
                    manifest.append(f"graph {Path(gpath).name} role=sparse")
            Path(f"{out}.chain").write_text("\n".join(manifest) + "\n")
            np.savetxt(f"{out}.values.csv", matrix.values, delimiter=",",
                       fmt="%.17g" if matrix.precision == "f64" else "%.9g")
            _info(f"wrote {out}.chain, {out}.g*.txt, {out}.values.csv")
    except KronsparseError as exc:
        _handle(exc)


if __name__ == "__main__":
    main()
