"""Command-line entry point: ``ppcs build-index | query | gen-private | bench | eval``.

Exit codes: 0 success, 1 benchmark with no successful cell, 2 input error,
3 unknown vertex, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from .errors import ContractViolation, GraphFormatError, IndexFormatError, RejectedInputError, UnknownVertexError
from .evaluation import SynthesisConfig, run_benchmark, sensitivity_sweep, synthesize_overlays
from .graph import (
    ALGORITHMS,
    dump_attrs,
    dump_edges,
    dump_overlays,
    pp_view,
    read_ground_truth,
    read_private_overlays,
    read_public_graph,
)
from .public_index import build_coreness_tree, load_index, save_index
from .search import run_algorithm

log = logging.getLogger("ppcs")

EXIT_OK, EXIT_EMPTY_BENCH, EXIT_INPUT, EXIT_UNKNOWN, EXIT_INTERNAL = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    edges: Optional[Path] = None
    attrs: Optional[Path] = None
    overlays: Optional[Path] = None
    index: Optional[Path] = None
    ground_truth: Optional[Path] = None
    k: int = 3
    algorithm: str = "ppfp"
    allow_plain_core: bool = False
    strict_paper_mode: bool = False
    conditional_support_merged: bool = False
    seed: int = 0
    output_format: str = "json"
    threads: int = 1

    def flags(self) -> dict:
        return {
            "allow_plain_core": self.allow_plain_core,
            "strict_paper_mode": self.strict_paper_mode,
            "conditional_support_merged": self.conditional_support_merged,
        }


def _configure_logging() -> None:
    level = os.environ.get("PPCS_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 1, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if level == "off":
        logging.disable(logging.CRITICAL)


def _require(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise InputError(f"--{what} is required")
    if not path.is_file():
        raise InputError(f"{what} file not found: {path}")
    return path


def _load(cfg: RunConfig, with_overlays: bool = True):
    g = read_public_graph(_require(cfg.edges, "edges"), _require(cfg.attrs, "attrs"))
    overlays = {}
    if with_overlays and cfg.overlays is not None:
        overlays = read_private_overlays(_require(cfg.overlays, "overlays"), g)
    return g, overlays


def _index_for(cfg: RunConfig, g):
    if cfg.index is not None:
        return load_index(_require(cfg.index, "index"), g)
    log.info("no --index given; building the coreness tree in memory")
    return build_coreness_tree(g)


def _read_queries(path: Path, g) -> List[int]:
    out = []
    with open(_require(path, "queries"), encoding="utf-8") as fh:
        for no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(g.internal(int(line.split()[0])))
            except ValueError:
                raise GraphFormatError(f"bad query id {line!r}", no, str(path)) from None
    return out


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}-", dir=path.parent)
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _lines(it) -> str:
    return "".join(line + "\n" for line in it)


# -- subcommands ---------------------------------------------------------------

def cmd_build_index(cfg: RunConfig, out: Path) -> int:
    t0 = time.perf_counter()
    g, _ = _load(cfg, with_overlays=False)
    idx = build_coreness_tree(g)
    elapsed = (time.perf_counter() - t0) * 1000.0
    size = save_index(idx, out)
    print(json.dumps({"index": str(out), "vertices": g.num_nodes, "edges": g.num_edges,
                      "branches": len(idx.branches), "build_ms": round(elapsed, 3), "bytes": size}))
    return EXIT_OK


def cmd_query(cfg: RunConfig, q_ext: int) -> int:
    g, overlays = _load(cfg)
    q = g.internal(q_ext)
    idx = _index_for(cfg, g) if cfg.algorithm == "ppfp" else None
    view = pp_view(g, overlays, q)
    res = run_algorithm(cfg.algorithm, view, q, cfg.k, idx, **cfg.flags())
    record = res.to_dict(g)
    if cfg.output_format == "csv":
        print("query,k,algo,members,shared_attrs,elapsed_ms")
        print(f"{record['query']},{record['k']},{record['algo']},{' '.join(map(str, record['members']))},"
              f"{' '.join(record['shared_attrs'])},{record['elapsed_ms']}")
    else:
        print(json.dumps(record))
    return EXIT_OK


def cmd_gen_private(cfg: RunConfig, synth: SynthesisConfig, args) -> int:
    g, _ = _load(cfg, with_overlays=False)
    if args.queries is not None:
        queries = _read_queries(args.queries, g)
    else:
        rng = random.Random(cfg.seed)
        queries = sorted(rng.sample(range(g.num_nodes), min(args.num_queries, g.num_nodes)))
    reduced, overlays = synthesize_overlays(g, queries, synth)
    _atomic_write(args.out_overlays, _lines(dump_overlays(overlays, reduced)))
    _atomic_write(args.out_edges, _lines(dump_edges(reduced)))
    if args.out_attrs is not None:
        _atomic_write(args.out_attrs, _lines(dump_attrs(reduced)))
    if args.out_queries is not None:
        _atomic_write(args.out_queries, _lines(str(reduced.external(q)) for q in queries))
    print(json.dumps({"queries": len(queries), "overlays": len(overlays),
                      "private_edges": sum(len(o.private_neighbors) for o in overlays.values()),
                      "public_edges": reduced.num_edges}))
    return EXIT_OK


def _per_k_tables(report) -> tuple:
    by = {}
    for r in report.records:
        if r.error is None:
            by.setdefault((r.k, r.algo), []).append(r)
    runtime = ["k,algo,cells,mean_ms,median_ms"]
    quality = ["k,algo,mean_shared_attrs,mean_gain,mean_f1"]
    for (k, algo), rows in sorted(by.items()):
        times = sorted(r.elapsed_ms for r in rows)
        mean = lambda xs: f"{sum(xs) / len(xs):.6f}" if xs else ""
        runtime.append(f"{k},{algo},{len(rows)},{mean(times)},{times[len(times) // 2]:.6f}")
        gains = [r.gain for r in rows if r.gain is not None]
        f1s = [r.f1 for r in rows if r.f1 is not None]
        quality.append(f"{k},{algo},{mean([r.shared_attr_count for r in rows])},{mean(gains)},{mean(f1s)}")
    return "\n".join(runtime) + "\n", "\n".join(quality) + "\n"


def _run_report(cfg: RunConfig, args):
    g, overlays = _load(cfg)
    queries = _read_queries(args.queries, g)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGORITHMS:
            raise InputError(f"unknown algorithm {a!r}")
    ks = [int(x) for x in args.ks.split(",")] if args.ks else [cfg.k]
    if any(k < 1 for k in ks):
        raise InputError("k must be >= 1")
    truth = read_ground_truth(_require(cfg.ground_truth, "ground-truth"), g) if cfg.ground_truth else None
    idx = _index_for(cfg, g) if "ppfp" in algos else None
    report = run_benchmark(g, overlays, idx, queries, ks, algos, truth, threads=cfg.threads, **cfg.flags())
    return g, overlays, queries, report


def cmd_bench(cfg: RunConfig, args) -> int:
    g, overlays, queries, report = _run_report(cfg, args)
    _atomic_write(args.out_csv, report.to_csv())
    if args.out_json is not None:
        _atomic_write(args.out_json, report.to_json() + "\n")
    if args.emit_plots is not None:
        runtime, quality = _per_k_tables(report)
        _atomic_write(Path(args.emit_plots) / "runtime_by_k.csv", runtime)
        _atomic_write(Path(args.emit_plots) / "quality_by_k.csv", quality)
    if args.sensitivity is not None:
        rows = sensitivity_sweep(g, overlays, queries)
        text = "query,attr_count,node_count,byte_size\n" + "".join(
            f"{r.query},{r.attr_count},{r.node_count},{r.byte_size}\n" for r in rows)
        _atomic_write(args.sensitivity, text)
    summary = report.summary()
    print(json.dumps({"cells": summary["cells"], "failed": summary["failed"], "csv": str(args.out_csv)}))
    ok = summary["cells"] - summary["failed"]
    return EXIT_OK if ok > 0 or summary["cells"] == 0 else EXIT_EMPTY_BENCH


def cmd_eval(cfg: RunConfig, args) -> int:
    _, _, _, report = _run_report(cfg, args)
    print(json.dumps(report.summary(), sort_keys=True))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppcs", description="Attributed community search on public-private graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_args(p, overlays=True):
        p.add_argument("--edges", type=Path, required=True, help="public edge list")
        p.add_argument("--attrs", type=Path, required=True, help="public attribute file")
        if overlays:
            p.add_argument("--overlays", type=Path, help="private overlay file")

    def search_flags(p):
        p.add_argument("--index", type=Path, help="coreness-tree index written by build-index")
        p.add_argument("--allow-plain-core", action="store_true",
                       help="ppfp: fall back to one shared attribute, then to the plain k-core")
        p.add_argument("--strict-paper-mode", action="store_true",
                       help="basic: check every subset of each size instead of stopping at the first hit")
        p.add_argument("--conditional-support-merged", action="store_true",
                       help="ppfp: count support over all prefix paths of a vertex")

    p = sub.add_parser("build-index", help="build and save the public coreness-tree index")
    graph_args(p, overlays=False)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("query", help="answer one query, printing a JSON object")
    graph_args(p)
    search_flags(p)
    p.add_argument("--query", type=int, required=True, help="external id of the query vertex")
    p.add_argument("--k", type=_positive, default=3)
    p.add_argument("--algo", choices=ALGORITHMS, default="ppfp")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("gen-private", help="synthesise private overlays from a public graph")
    graph_args(p, overlays=False)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--queries", type=Path, help="file of query vertex ids")
    group.add_argument("--num-queries", type=_positive, help="sample this many query vertices")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edge-fraction", type=_fraction, default=0.5)
    p.add_argument("--attrs-min", type=int, default=1)
    p.add_argument("--attrs-max", type=int, default=3)
    p.add_argument("--noise-fraction", type=_fraction, default=0.1)
    p.add_argument("--out-overlays", type=Path, required=True)
    p.add_argument("--out-edges", type=Path, required=True)
    p.add_argument("--out-attrs", type=Path)
    p.add_argument("--out-queries", type=Path)

    for name, helptext in (("bench", "run a benchmark sweep and write CSV/JSON"),
                           ("eval", "print quality aggregates for a query set")):
        p = sub.add_parser(name, help=helptext)
        graph_args(p)
        search_flags(p)
        p.add_argument("--queries", type=Path, required=True)
        p.add_argument("--ks", default=None, help="comma-separated k values")
        p.add_argument("--k", type=_positive, default=3)
        p.add_argument("--algos", default="basic,binary,ppfp")
        p.add_argument("--ground-truth", type=Path)
        p.add_argument("--threads", type=_positive, default=1)
        if name == "bench":
            p.add_argument("--out-csv", type=Path, required=True)
            p.add_argument("--out-json", type=Path)
            p.add_argument("--emit-plots", type=Path, help="directory for per-k runtime/quality tables")
            p.add_argument("--sensitivity", type=Path, help="write PP-FP-tree size per query here")
    return parser


def _config(args) -> RunConfig:
    get = lambda name, default=None: getattr(args, name, default)
    return RunConfig(
        edges=get("edges"), attrs=get("attrs"), overlays=get("overlays"), index=get("index"),
        ground_truth=get("ground_truth"), k=get("k", 3) or 3, algorithm=get("algo", "ppfp") or "ppfp",
        allow_plain_core=bool(get("allow_plain_core")), strict_paper_mode=bool(get("strict_paper_mode")),
        conditional_support_merged=bool(get("conditional_support_merged")), seed=get("seed", 0) or 0,
        output_format=get("format", "json") or "json", threads=get("threads", 1) or 1,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args)
    try:
        if args.command == "build-index":
            return cmd_build_index(cfg, args.out)
        if args.command == "query":
            return cmd_query(cfg, args.query)
        if args.command == "gen-private":
            synth = SynthesisConfig(args.edge_fraction, args.attrs_min, args.attrs_max, args.noise_fraction, args.seed)
            return cmd_gen_private(cfg, synth, args)
        if args.command == "bench":
            return cmd_bench(cfg, args)
        if args.command == "eval":
            return cmd_eval(cfg, args)
    except UnknownVertexError as exc:
        print(f"ppcs: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (InputError, GraphFormatError, RejectedInputError, IndexFormatError, OSError, ValueError) as exc:
        if isinstance(exc, ContractViolation):
            print(f"ppcs: internal error: {exc}", file=sys.stderr)
            return EXIT_INTERNAL
        print(f"ppcs: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ContractViolation, AssertionError) as exc:
        print(f"ppcs: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    parser.error(f"unknown command {args.command}")  # pragma: no cover
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
