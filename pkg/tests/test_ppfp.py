from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppcs.graph import AttributeDict, AttributedPublicGraph, pp_view
from ppcs.ppfp import (
    build_conditional,
    build_ppfp_tree,
    build_tree,
    eligible_for_conditional,
    extract_lists,
    merged_support,
    prefix_path,
)


@pytest.fixture
def running_tree(running):
    g, ovs = running
    view = pp_view(g, ovs, 0)
    return g, view, build_ppfp_tree(view, 0)


def attrs(g, *names):
    return frozenset(g.attr_dict.id_of(a) for a in names)


class TestLists:
    def test_running_order(self, running):
        g, ovs = running
        lists = extract_lists(pp_view(g, ovs, 0), 0)
        assert [(e.vertex, e.count) for e in lists.entries] == [(1, 4), (2, 3), (3, 3)]
        assert lists.attr_map[g.attr_dict.id_of("c")] == [1, 2, 3]
        assert lists.attr_map[g.attr_dict.id_of("b")] == [1, 3]
        assert [g.attr_dict.name(a) for a in lists.attribute_order()] == list("cbdea")

    def test_no_neighbours(self):
        g = AttributedPublicGraph.from_edges([], {0: ["x"]})
        lists = extract_lists(pp_view(g, {}, 0), 0)
        assert lists.entries == [] and lists.attr_map == {}
        tree = build_tree(lists)
        assert len(tree) == 0 and tree.to_bytes() == b""

    def test_neighbour_without_shared_attrs_is_skipped(self):
        g = AttributedPublicGraph.from_edges([(0, 1), (0, 2)], {0: ["x"], 1: ["y"], 2: ["x"]})
        lists = extract_lists(pp_view(g, {}, 0), 0)
        assert [e.vertex for e in lists.entries] == [2]


class TestTree:
    def test_running_nodes(self, running_tree):
        g, _, tree = running_tree
        assert tree.occurrence(3, 1).as_tuple() == (1, 3, attrs(g, "c"))
        assert tree.occurrence(1, 1).as_tuple() == (4, 4, attrs(g, "b", "c", "d", "e"))
        assert tree.occurrence(3, 2).parent is tree.occurrence(1, 1)
        assert tree.occurrence(3, 2).as_tuple() == (2, 3, attrs(g, "b", "d"))
        assert tree.occurrence(2, 1).as_tuple() == (2, 3, attrs(g, "c", "e"))
        assert tree.occurrence(2, 2).as_tuple() == (1, 3, attrs(g, "a"))
        assert tree.occurrence(2, 2).parent is tree.root
        assert len(tree) == 5
        assert tree.max_overall() == 4

    def test_prefix_paths(self, running_tree):
        _, _, tree = running_tree
        assert prefix_path(tree.occurrence(3, 1)) == [1, 2, 3]
        assert prefix_path(tree.occurrence(3, 2)) == [1, 3]
        assert prefix_path(tree.occurrence(1, 1)) == [1]

    def test_dump(self, running_tree):
        g, _, tree = running_tree
        assert tree.dump(g.attr_dict.name).splitlines() == [
            "1 4/4 {b,c,d,e}",
            "  2 2/3 {c,e}",
            "    3 1/3 {c}",
            "  3 2/3 {b,d}",
            "2 1/3 {a}",
        ]

    def test_bytes_deterministic(self, running_tree):
        _, view, tree = running_tree
        assert tree.to_bytes() == build_ppfp_tree(view, 0).to_bytes()
        assert len(tree.to_bytes()) > 0


class TestConditional:
    def test_v3(self, running_tree):
        g, view, tree = running_tree
        cond = build_conditional(tree, view, 3)
        assert cond.counts == {1: 3, 3: 3}
        assert cond.cond_attrs == attrs(g, "b", "c", "d")
        assert cond.pattern_base == [([1, 2, 3], 1), ([1, 3], 2)]
        assert cond.support(3) == [1, 3]

    def test_v2_only_base_survives(self, running_tree):
        _, view, tree = running_tree
        cond = build_conditional(tree, view, 2)
        assert 1 not in cond.counts
        assert cond.counts == {2: 3}
        assert cond.trivial

    def test_single_depth_one_occurrence(self):
        g = AttributedPublicGraph.from_edges([(0, 1)], {0: ["x", "y"], 1: ["x", "y", "z"]})
        view = pp_view(g, {}, 0)
        tree = build_ppfp_tree(view, 0)
        assert build_conditional(tree, view, 1).counts == {1: 2}

    def test_eligibility(self, running_tree):
        _, _, tree = running_tree
        assert eligible_for_conditional(tree.occurrence(3, 1), 3, 2)
        assert not eligible_for_conditional(tree.occurrence(1, 1), 3, 2)
        assert not eligible_for_conditional(tree.occurrence(3, 1), 4, 2)
        assert not eligible_for_conditional(tree.occurrence(3, 1), 3, 4)

    def test_merged_support(self, running_tree):
        _, _, tree = running_tree
        assert merged_support(tree, 3) == 3
        node = tree.occurrence(3, 2)
        assert not eligible_for_conditional(node, 3, 3)
        assert eligible_for_conditional(node, 3, 3, support=merged_support(tree, 3))


# -- properties on random neighbourhoods --------------------------------------

VOCAB = [f"t{i}" for i in range(12)]


@st.composite
def neighbourhoods(draw):
    n = draw(st.integers(0, 50))
    na = draw(st.integers(1, 12))
    vocab = VOCAB[:na]
    a_sets = st.sets(st.sampled_from(vocab), max_size=na)
    q_attrs = draw(a_sets)
    attrs = {0: q_attrs}
    for v in range(1, n + 1):
        attrs[v] = draw(a_sets)
    g = AttributedPublicGraph.from_edges(
        [(0, v) for v in range(1, n + 1)], attrs, nodes=[0], attr_dict=AttributeDict(VOCAB)
    )
    return pp_view(g, {}, 0)


@settings(max_examples=150, deadline=None)
@given(neighbourhoods())
def test_tree_invariants(view):
    q = 0
    qa = view.attrs(q)
    lists = extract_lists(view, q)
    tree = build_tree(lists)
    # every attribute list follows the single global order
    rank = {e.vertex: i for i, e in enumerate(lists.entries)}
    for a, vs in lists.attr_map.items():
        assert [rank[v] for v in vs] == sorted(rank[v] for v in vs)
    assert len(tree) <= sum(len(vs) for vs in lists.attr_map.values())
    for node in tree.nodes():
        shared = view.attrs(node.vertex) & qa
        assert node.prefix_attr_num == len(node.prefix_attrs) >= 1
        assert node.overall_attr_num == len(shared)
        if node.parent is not tree.root:
            assert node.prefix_attrs <= node.parent.prefix_attrs
        for w in prefix_path(node):
            # every path vertex holds the node's prefix attributes
            assert node.prefix_attrs <= view.attrs(w)
            assert len(view.attrs(w) & qa) >= node.prefix_attr_num
    for v, occ in tree.node_links.items():
        union = set()
        for node in occ:
            assert not union & node.prefix_attrs
            union |= node.prefix_attrs
        # occurrences of v partition its shared attributes
        assert union == view.attrs(v) & qa
        assert [n.occurrence for n in occ] == list(range(1, len(occ) + 1))


@settings(max_examples=150, deadline=None)
@given(neighbourhoods())
def test_conditional_counts_are_three_way_intersections(view):
    qa = view.attrs(0)
    tree = build_ppfp_tree(view, 0)
    for v in tree.node_links:
        cond = build_conditional(tree, view, v)
        assert cond.counts.get(v) == len(view.attrs(v) & qa)
        for u, c in cond.counts.items():
            assert cond.cond_attrs <= view.attrs(u) & qa
            assert c == len(qa & view.attrs(v) & view.attrs(u))
