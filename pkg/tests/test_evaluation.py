from __future__ import annotations

import csv
import io
import logging
import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import acceptance_instance
from ppcs.evaluation import (
    CSV_FIELDS,
    SensitivityRow,
    SynthesisConfig,
    best_f1,
    bucket_means,
    f1_score,
    planted_instance,
    random_attributed_graph,
    run_benchmark,
    sensitivity_sweep,
    synthesize_overlays,
)
from ppcs.graph import AttributeDict, AttributedPublicGraph, dump_overlays, pp_view
from ppcs.ppfp import build_ppfp_tree, extract_lists
from ppcs.public_index import build_coreness_tree


def star(deg: int, q_attrs=("a", "b", "c", "d")):
    return AttributedPublicGraph.from_edges([(0, v) for v in range(1, deg + 1)], {0: list(q_attrs)})


def check_synthesis(g, reduced, overlays, queries):
    """Overlay invariants plus degree conservation."""
    for q, ov in overlays.items():
        assert q in queries
        ov.validate(reduced)
        assert q not in ov.private_neighbors
        assert not ov.private_neighbors & reduced.neighbors(q)
        for v, extra in ov.private_attrs.items():
            assert not extra & reduced.attrs(v)
    for q in queries:
        hidden = overlays[q].private_neighbors if q in overlays else frozenset()
        assert reduced.degree(q) + len(hidden) == g.degree(q)
        assert reduced.neighbors(q) | hidden == g.neighbors(q)
        # the view restores every original attribute of q
        assert g.attrs(q) <= pp_view(reduced, overlays, q).attrs(q)


class TestSynthesis:
    def test_half_of_ten_edges(self):
        g = star(10)
        reduced, ovs = synthesize_overlays(g, [0], SynthesisConfig(seed=3))
        assert len(ovs[0].private_neighbors) == 5
        assert reduced.degree(0) == 5

    def test_attribute_count(self):
        for seed in range(20):
            g = star(4)
            _, ovs = synthesize_overlays(g, [0], SynthesisConfig(seed=seed, noise_node_fraction=0))
            assert 1 <= len(ovs[0].attrs_of(0)) <= 3

    def test_zero_fraction_is_identity(self):
        g = star(10)
        cfg = SynthesisConfig(edge_fraction=0, attrs_min=0, attrs_max=0, noise_node_fraction=0)
        reduced, ovs = synthesize_overlays(g, [0], cfg)
        assert ovs == {}
        assert list(reduced.edges()) == list(g.edges())
        assert [reduced.attrs(v) for v in reduced.nodes()] == [g.attrs(v) for v in g.nodes()]

    def test_deterministic(self):
        g = random_attributed_graph(1, n=300)
        queries = list(range(0, 300, 7))
        dumps = []
        for _ in range(2):
            reduced, ovs = synthesize_overlays(g, queries, SynthesisConfig(seed=42))
            dumps.append("\n".join(dump_overlays(ovs, reduced)))
        assert dumps[0] == dumps[1] and dumps[0]
        _, other = synthesize_overlays(g, queries, SynthesisConfig(seed=43))
        assert "\n".join(dump_overlays(other, g)) != dumps[0]

    def test_noise_attributes_are_fresh(self):
        g = random_attributed_graph(2, n=200)
        reduced, _ = synthesize_overlays(g, [], SynthesisConfig(seed=1, noise_node_fraction=0.1))
        noisy = [v for v in reduced.nodes() if reduced.attrs(v) - g.attrs(v)]
        assert len(noisy) == 20
        fresh = [reduced.attrs(v) - g.attrs(v) for v in noisy]
        assert all(len(f) == 1 for f in fresh)
        assert len(set().union(*fresh)) == 20
        assert all(reduced.attr_dict.name(a).startswith("noise") and a >= len(g.attr_dict) for f in fresh for a in f)

    def test_adjacent_queries_share_edge(self):
        g = AttributedPublicGraph.from_edges([(0, 1)], {0: ["a"], 1: ["a"]})
        reduced, ovs = synthesize_overlays(g, [0, 1], SynthesisConfig(edge_fraction=1.0, seed=0))
        assert ovs[0].private_neighbors == {1} and ovs[1].private_neighbors == {0}
        check_synthesis(g, reduced, ovs, [0, 1])

    @pytest.mark.parametrize("frac", [0.0, 0.3, 0.5, 1.0])
    def test_invariants_random(self, frac):
        g = random_attributed_graph(5, n=400)
        queries = random.Random(5).sample(range(400), 60)
        reduced, ovs = synthesize_overlays(g, queries, SynthesisConfig(edge_fraction=frac, seed=9))
        check_synthesis(g, reduced, ovs, queries)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SynthesisConfig(edge_fraction=1.5)
        with pytest.raises(ValueError):
            SynthesisConfig(attrs_min=3, attrs_max=1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6), st.floats(0, 1), st.integers(0, 3), st.integers(0, 3))
    def test_invariants_property(self, seed, frac, lo, extra):
        g = random_attributed_graph(seed, n=60, avg_degree=6, vocab=10, attrs_min=0, attrs_max=6)
        queries = random.Random(seed).sample(range(60), 15)
        cfg = SynthesisConfig(edge_fraction=frac, attrs_min=lo, attrs_max=lo + extra, seed=seed)
        reduced, ovs = synthesize_overlays(g, queries, cfg)
        check_synthesis(g, reduced, ovs, queries)


class TestF1:
    def test_values(self):
        assert f1_score({1, 2}, {1, 2}) == 1.0
        assert f1_score({1, 2}, {1, 2, 3, 4}) == pytest.approx(2 / 3)
        assert f1_score({1}, {2}) == 0.0

    def test_empty_input_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert f1_score(set(), {1}) == 0.0
        assert "empty" in caplog.text

    def test_best_match(self):
        comms = [frozenset({1, 2, 3}), frozenset({1, 2}), frozenset({7, 8})]
        assert best_f1({1, 2}, 1, comms) == 1.0
        assert best_f1({1, 2}, 9, comms) is None
        assert best_f1(set(), 1, comms) == 0.0


class TestBenchmark:
    def test_empty_queries(self, running):
        g, ovs = running
        report = run_benchmark(g, ovs, None, [], [2], ["basic", "ppfp"])
        assert report.records == []
        assert report.summary()["cells"] == 0

    def test_binary_gain_is_one(self):
        for seed in range(100):
            g, ovs, q, k = acceptance_instance(seed)
            report = run_benchmark(g, ovs, None, [q], [k], ["basic", "binary"])
            for rec in report.records:
                assert rec.gain in (None, 1.0)
                if rec.gain is None:
                    assert rec.shared_attr_count == 0

    def test_gain_and_csv(self, running):
        g, ovs = running
        idx = build_coreness_tree(g)
        report = run_benchmark(g, ovs, idx, [0, 1, 4], [1, 2], ["ppfp", "basic"], threads=3)
        assert len(report.records) == 12
        rows = list(csv.DictReader(io.StringIO(report.to_csv())))
        assert list(rows[0])[: len(CSV_FIELDS)] == CSV_FIELDS
        for row in rows:
            if row["algo"] == "basic" and row["shared_attr_count"] != "0":
                assert float(row["gain"]) == 1.0
            assert row["f1"] == ""
        summary = report.summary()["algorithms"]
        assert 0 <= summary["ppfp"]["mean_gain"] <= 1
        assert summary["basic"]["runtime_ms"]["p50"] is not None

    def test_no_exact_algorithm_leaves_gain_empty(self, running):
        g, ovs = running
        report = run_benchmark(g, ovs, None, [0], [2], ["ppfp"])
        assert all(r.gain is None for r in report.records)

    def test_ground_truth_f1(self, collab):
        g, ovs = collab
        truth = [frozenset(g.internal(x) for x in (5, 6, 7, 8, 9))]
        report = run_benchmark(g, ovs, None, [g.internal(5)], [3], ["basic"], ground_truth=truth)
        assert report.records[0].f1 == 1.0

    def test_failures_are_recorded(self, running):
        g, ovs = running
        report = run_benchmark(g, ovs, None, [0, 99], [2], ["basic"])
        assert report.records[0].error is None
        assert report.records[1].error is not None
        assert report.summary()["failed"] == 1

    def test_report_deterministic_apart_from_timing(self):
        g, ovs, q, k = acceptance_instance(7)
        a = run_benchmark(g, ovs, None, [q], [2, 3], ["basic", "binary", "ppfp"])
        b = run_benchmark(g, ovs, None, [q], [2, 3], ["basic", "binary", "ppfp"], threads=4)
        strip = lambda rs: [(r.query, r.k, r.algo, r.shared_attr_count, r.member_count, r.gain) for r in rs]
        assert strip(a.records) == strip(b.records)


class TestSensitivity:
    def test_zero_attribute_query(self):
        g = AttributedPublicGraph.from_edges([(0, 1)], {1: ["x"]})
        (row,) = sensitivity_sweep(g, {}, [0])
        assert (row.attr_count, row.node_count, row.byte_size) == (0, 0, 0)

    def test_single_attribute(self):
        g = AttributedPublicGraph.from_edges([(0, v) for v in range(1, 6)], {v: ["x"] for v in range(0, 6, 2)})
        (row,) = sensitivity_sweep(g, {}, [0])
        theta = extract_lists(pp_view(g, {}, 0), 0).attr_map[g.attr_dict.id_of("x")]
        assert row.node_count == len(theta) == 2

    def test_doubling_attributes_roughly_doubles_size(self):
        rng = random.Random(11)
        n = 600
        edges = random_attributed_graph(11, n=n)
        base_vocab = [f"a{i}" for i in range(30)]
        copy_vocab = [f"b{i}" for i in range(30)]
        single = {v: rng.sample(base_vocab, rng.randint(2, 10)) for v in range(n)}
        # the copy goes through a permutation so its vertex lists differ from the originals
        perm = dict(zip(base_vocab, rng.sample(copy_vocab, 30)))
        doubled = {v: single[v] + [perm[a] for a in single[v]] for v in range(n)}
        es = [(edges.external(u), edges.external(v)) for u, v in edges.edges()]
        g1 = AttributedPublicGraph.from_edges(es, single, nodes=range(n))
        g2 = AttributedPublicGraph.from_edges(es, doubled, nodes=range(n))
        s1 = statistics.fmean(r.byte_size for r in sensitivity_sweep(g1, {}, range(n)))
        s2 = statistics.fmean(r.byte_size for r in sensitivity_sweep(g2, {}, range(n)))
        assert 1.0 < s2 / s1 <= 4.0

    def test_bucket_means(self):
        rows = [SensitivityRow(0, a, 0, b) for a, b in [(1, 10), (2, 30), (5, 50), (6, 70)]]
        assert bucket_means(rows) == [(1, 10), (2, 30), (5, 50), (6, 70)]
        assert bucket_means(rows, width=4) == [(1.5, 20), (5.5, 60)]


class TestGenerators:
    def test_planted_instance_is_valid(self):
        for seed in range(30):
            g, ovs, q = planted_instance(seed)
            for ov in ovs.values():
                ov.validate(g)
            assert q == 0

    def test_random_graph_shape(self):
        g = random_attributed_graph(0, n=400, avg_degree=10)
        assert g.num_nodes == 400
        assert 8 <= 2 * g.num_edges / g.num_nodes <= 12
        assert all(2 <= len(g.attrs(v)) for v in g.nodes())

    def test_tree_size_matches_sweep(self):
        g, ovs, q = planted_instance(3)
        (row,) = sensitivity_sweep(g, ovs, [q])
        tree = build_ppfp_tree(pp_view(g, ovs, q), q)
        assert row.node_count == len(tree) and row.byte_size == len(tree.to_bytes())


def test_attribute_dict_is_append_only():
    d = AttributeDict(["b", "a"])
    first = {n: d.id_of(n) for n in "ab"}
    d.intern("zz")
    assert {n: d.id_of(n) for n in "ab"} == first
    assert d.name(d.id_of("zz")) == "zz"
