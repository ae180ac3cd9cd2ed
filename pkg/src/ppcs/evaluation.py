"""Evaluation protocol: private-data synthesis, quality metrics, benchmark sweeps
and seeded instance generators."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .graph import AttributeDict, AttributedPublicGraph, PrivateOverlay, pp_view
from .ppfp import build_ppfp_tree
from .public_index import CorenessTree, build_coreness_tree
from .search import run_algorithm

log = logging.getLogger(__name__)

EXACT_ALGORITHMS = ("basic", "binary")


@dataclass(frozen=True)
class SynthesisConfig:
    edge_fraction: float = 0.5
    attrs_min: int = 1
    attrs_max: int = 3
    noise_node_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("edge_fraction", "noise_node_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0 <= self.attrs_min <= self.attrs_max:
            raise ValueError(f"need 0 <= attrs_min <= attrs_max, got {self.attrs_min}, {self.attrs_max}")


def _ceil(x: float) -> int:
    # 0.5 * 10 must give 5, not 6 from float noise
    return math.ceil(round(x, 9))


def synthesize_overlays(
    g: AttributedPublicGraph, queries: Sequence[int], cfg: SynthesisConfig
) -> Tuple[AttributedPublicGraph, Dict[int, PrivateOverlay]]:
    """Hide part of each query's public data in its private star-graph.

    Returns the reduced public graph and the overlays.  A privatised edge
    between two query vertices becomes private to both endpoints.
    """
    rng = random.Random(cfg.seed)
    adj = [set(g.neighbors(v)) for v in g.nodes()]
    attrs = [set(g.attrs(v)) for v in g.nodes()]
    order = list(dict.fromkeys(queries))
    qset = set(order)
    priv_nbrs: Dict[int, set] = {q: set() for q in order}
    priv_attrs: Dict[int, set] = {q: set() for q in order}

    for q in order:
        need = _ceil(cfg.edge_fraction * g.degree(q)) - len(priv_nbrs[q])
        if need > 0 and adj[q]:
            for u in rng.sample(sorted(adj[q]), min(need, len(adj[q]))):
                adj[q].discard(u)
                adj[u].discard(q)
                priv_nbrs[q].add(u)
                if u in qset:
                    priv_nbrs[u].add(q)
        if cfg.attrs_max > 0 and attrs[q]:
            c = rng.randint(cfg.attrs_min, cfg.attrs_max)
            moved = rng.sample(sorted(attrs[q]), min(c, len(attrs[q])))
            attrs[q].difference_update(moved)
            priv_attrs[q].update(moved)

    attr_dict = g.attr_dict.copy()
    n_noise = round(cfg.noise_node_fraction * g.num_nodes)
    serial = 0
    for v in sorted(rng.sample(range(g.num_nodes), n_noise)):
        while f"noise{serial}" in attr_dict:
            serial += 1
        attrs[v].add(attr_dict.intern(f"noise{serial}"))
        serial += 1

    reduced = AttributedPublicGraph(
        [g.external(v) for v in g.nodes()],
        [frozenset(a) for a in adj],
        [frozenset(a) for a in attrs],
        attr_dict,
    )
    overlays = {}
    for q in sorted(order):
        if priv_nbrs[q] or priv_attrs[q]:
            overlays[q] = PrivateOverlay(
                q, frozenset(priv_nbrs[q]), {q: frozenset(priv_attrs[q])} if priv_attrs[q] else {}
            )
    return reduced, overlays


# -- metrics -------------------------------------------------------------------

def f1_score(found: Iterable[int], truth: Iterable[int]) -> float:
    found, truth = set(found), set(truth)
    if not found or not truth:
        log.warning("f1_score on an empty set (|found|=%d, |truth|=%d); scoring 0", len(found), len(truth))
        return 0.0
    hit = len(found & truth)
    if hit == 0:
        return 0.0
    prec = hit / len(found)
    recall = hit / len(truth)
    return 2 * prec * recall / (prec + recall)


def best_f1(found: Iterable[int], q: int, communities: Sequence[FrozenSet[int]]) -> Optional[float]:
    """Max F1 over ground-truth communities containing q; None if q is in none."""
    found = set(found)
    scores = [f1_score(found, c) if found else 0.0 for c in communities if q in c]
    return max(scores) if scores else None


# -- benchmark -----------------------------------------------------------------

@dataclass
class QueryRecord:
    query: int
    k: int
    algo: str
    shared_attr_count: Optional[int]
    member_count: Optional[int]
    elapsed_ms: Optional[float]
    f1: Optional[float] = None
    gain: Optional[float] = None
    error: Optional[str] = None


CSV_FIELDS = ["query", "k", "algo", "shared_attr_count", "member_count", "elapsed_ms", "f1", "gain"]


def _percentile(values: List[float], p: float) -> Optional[float]:
    if not values:
        return None
    if len(values) == 1:
        return values[0]
    return statistics.quantiles(values, n=100, method="inclusive")[int(p) - 1]


@dataclass
class QualityReport:
    records: List[QueryRecord] = field(default_factory=list)

    def summary(self) -> dict:
        out = {"cells": len(self.records), "failed": sum(r.error is not None for r in self.records), "algorithms": {}}
        for algo in dict.fromkeys(r.algo for r in self.records):
            rows = [r for r in self.records if r.algo == algo and r.error is None]
            times = sorted(r.elapsed_ms for r in rows)
            gains = [r.gain for r in rows if r.gain is not None]
            f1s = [r.f1 for r in rows if r.f1 is not None]
            out["algorithms"][algo] = {
                "cells": len(rows),
                "mean_shared_attrs": statistics.fmean([r.shared_attr_count for r in rows]) if rows else None,
                "mean_gain": statistics.fmean(gains) if gains else None,
                "mean_f1": statistics.fmean(f1s) if f1s else None,
                "runtime_ms": {
                    "p50": _percentile(times, 50),
                    "p90": _percentile(times, 90),
                    "p99": _percentile(times, 99),
                    "mean": statistics.fmean(times) if times else None,
                },
            }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS + ["error"], lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            row = asdict(r)
            for key in ("f1", "gain"):
                if row[key] is not None:
                    row[key] = f"{row[key]:.6f}"
            if row["elapsed_ms"] is not None:
                row["elapsed_ms"] = f"{row['elapsed_ms']:.3f}"
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def run_benchmark(
    g: AttributedPublicGraph,
    overlays: Mapping[int, PrivateOverlay],
    public_idx: Optional[CorenessTree],
    queries: Sequence[int],
    ks: Sequence[int],
    algos: Sequence[str],
    ground_truth: Optional[Sequence[FrozenSet[int]]] = None,
    threads: int = 1,
    **flags,
) -> QualityReport:
    """Run every (query, k, algorithm) cell. Failures are recorded, never raised."""
    if public_idx is None and "ppfp" in algos:
        public_idx = build_coreness_tree(g)
    cells = [(q, k, a) for q in queries for k in ks for a in algos]

    def run(cell) -> Tuple[QueryRecord, Optional[FrozenSet[int]]]:
        q, k, algo = cell
        try:
            view = pp_view(g, overlays, q)
            res = run_algorithm(algo, view, q, k, public_idx, **flags)
        except Exception as exc:  # recorded per cell
            log.warning("cell (%s, %s, %s) failed: %s", q, k, algo, exc)
            return QueryRecord(g.external(q) if 0 <= q < g.num_nodes else q, k, algo, None, None, None,
                               error=f"{type(exc).__name__}: {exc}"), None
        f1 = best_f1(res.members, q, ground_truth) if ground_truth is not None else None
        rec = QueryRecord(g.external(q), k, algo, len(res.shared_attrs), len(res.members), res.elapsed_ms, f1)
        return rec, res.shared_attrs

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
        # results come back in submission order, keeping the report deterministic
    else:
        results = [run(c) for c in cells]

    exact_algo = next((a for a in EXACT_ALGORITHMS if a in algos), None)
    if exact_algo is not None:
        best: Dict[Tuple[int, int], int] = {}
        for (q, k, a), (rec, _) in zip(cells, results):
            if a == exact_algo and rec.error is None:
                best[(q, k)] = rec.shared_attr_count
        for (q, k, a), (rec, _) in zip(cells, results):
            opt = best.get((q, k))
            if rec.error is None and opt:
                rec.gain = rec.shared_attr_count / opt
    return QualityReport([rec for rec, _ in results])


@dataclass(frozen=True)
class SensitivityRow:
    query: int
    attr_count: int
    node_count: int
    byte_size: int


def sensitivity_sweep(
    g: AttributedPublicGraph, overlays: Mapping[int, PrivateOverlay], queries: Sequence[int]
) -> List[SensitivityRow]:
    rows = []
    for q in queries:
        view = pp_view(g, overlays, q)
        tree = build_ppfp_tree(view, q)
        rows.append(SensitivityRow(g.external(q), len(view.attrs(q)), len(tree), len(tree.to_bytes())))
    return rows


def bucket_means(rows: Iterable[SensitivityRow], width: int = 1) -> List[Tuple[float, float]]:
    """(mean attribute count, mean tree byte size) per bucket of ``width``
    consecutive attribute counts, ascending."""
    buckets: Dict[int, List[SensitivityRow]] = {}
    for r in rows:
        buckets.setdefault(r.attr_count // width, []).append(r)
    return [
        (statistics.fmean(r.attr_count for r in rs), statistics.fmean(r.byte_size for r in rs))
        for _, rs in sorted(buckets.items())
    ]


# -- seeded instance generators ------------------------------------------------

def planted_instance(
    seed: int,
    n: int = 20,
    groups: int = 3,
    p_in: float = 0.7,
    out_degree: float = 1.0,
    vocab: int = 8,
    theme_size: int = 4,
    theme_keep: float = 0.9,
    extra_attrs: int = 1,
    q_attrs: Optional[int] = 6,
    private_neighbor_attrs: int = 2,
    synth: Optional[SynthesisConfig] = None,
) -> Tuple[AttributedPublicGraph, Dict[int, PrivateOverlay], int]:
    """Random attributed graph with planted attribute-themed groups, plus a private
    overlay for one query vertex (returned third).

    Groups are dense inside (``p_in``) and sparsely linked (``out_degree``
    expected cross edges per vertex).  Each group has a theme of
    ``theme_size`` attributes that members keep with probability
    ``theme_keep``; every vertex also draws ``extra_attrs`` random attributes.
    """
    rng = random.Random(seed)
    names = [f"a{i}" for i in range(vocab)]
    group_of = [i % groups for i in range(n)]
    themes = [rng.sample(names, min(theme_size, vocab)) for _ in range(groups)]
    attrs: Dict[int, set] = {}
    for v in range(n):
        own = {a for a in themes[group_of[v]] if rng.random() < theme_keep}
        own.update(rng.sample(names, min(extra_attrs, vocab)))
        attrs[v] = own
    edges = set()
    members: Dict[int, List[int]] = {}
    for v in range(n):
        members.setdefault(group_of[v], []).append(v)
    for vs in members.values():
        for i, u in enumerate(vs):
            for w in vs[i + 1:]:
                if rng.random() < p_in:
                    edges.add((u, w))
    for _ in range(int(out_degree * n / 2)):
        u, w = rng.randrange(n), rng.randrange(n)
        if u != w and group_of[u] != group_of[w]:
            edges.add((min(u, w), max(u, w)))
    q = 0
    if q_attrs is not None:
        pool = list(themes[0]) + [a for a in names if a not in themes[0]]
        want = list(dict.fromkeys(pool[:theme_size] + rng.sample(pool, len(pool))))[:q_attrs]
        attrs[q] = set(want)
    g = AttributedPublicGraph.from_edges(sorted(edges), attrs, nodes=range(n), attr_dict=AttributeDict(names))
    cfg = synth or SynthesisConfig(edge_fraction=0.5, attrs_min=1, attrs_max=3, noise_node_fraction=0.1, seed=seed)
    g, overlays = synthesize_overlays(g, [q], cfg)
    if private_neighbor_attrs:
        ov = overlays.get(q, PrivateOverlay(q))
        extra = dict(ov.private_attrs)
        nbrs = sorted(g.neighbors(q) | ov.private_neighbors)
        vocab_ids = [g.attr_dict.id_of(a) for a in names]
        for v in rng.sample(nbrs, min(private_neighbor_attrs, len(nbrs))):
            missing = [a for a in vocab_ids if a not in g.attrs(v) and a not in extra.get(v, ())]
            if missing:
                extra[v] = extra.get(v, frozenset()) | {rng.choice(missing)}
        overlays[q] = PrivateOverlay(q, ov.private_neighbors, extra)
    for ov in overlays.values():
        ov.validate(g)
    return g, overlays, q


def random_attributed_graph(
    seed: int,
    n: int = 400,
    avg_degree: float = 10.0,
    vocab: int = 40,
    attrs_min: int = 2,
    attrs_max: int = 20,
) -> AttributedPublicGraph:
    """Erdos-Renyi style graph whose vertices carry a uniformly sized random attribute set."""
    rng = random.Random(seed)
    names = [f"a{i}" for i in range(vocab)]
    edges = set()
    target = int(avg_degree * n / 2)
    while len(edges) < target:
        u, w = rng.randrange(n), rng.randrange(n)
        if u != w:
            edges.add((min(u, w), max(u, w)))
    attrs = {v: rng.sample(names, rng.randint(attrs_min, min(attrs_max, vocab))) for v in range(n)}
    return AttributedPublicGraph.from_edges(sorted(edges), attrs, nodes=range(n), attr_dict=AttributeDict(names))
