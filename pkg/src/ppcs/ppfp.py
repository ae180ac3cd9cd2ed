"""Per-query PP-FP-tree: a prefix tree over the query's public-private neighbourhood.

Each neighbour ``v`` sharing attributes with the query ``q`` is listed once in
a global order (shared-attribute count descending, id ascending).  For every
attribute ``a`` of ``q`` the ordered list of neighbours holding ``a`` is
threaded from the root, so a root-to-node path records vertices that co-occur
under the attributes accumulated at that node.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Tuple


class ListEntry(NamedTuple):
    vertex: int
    count: int
    attrs: FrozenSet[int]


@dataclass
class NodeAttributeLists:
    """Sorted node attribute list plus the per-attribute vertex map."""

    query: int
    query_attrs: FrozenSet[int]
    entries: List[ListEntry]
    attr_map: Dict[int, List[int]]

    def attribute_order(self) -> List[int]:
        """Insertion order used by :func:`build_tree`: most frequent first, ties by id."""
        return sorted(self.attr_map, key=lambda a: (-len(self.attr_map[a]), a))


def extract_lists(view, q: int) -> NodeAttributeLists:
    qa = view.attrs(q)
    entries = []
    for v in view.neighbors(q):
        common = view.attrs(v) & qa
        if common:
            entries.append(ListEntry(v, len(common), frozenset(common)))
    entries.sort(key=lambda e: (-e.count, e.vertex))
    attr_map: Dict[int, List[int]] = {}
    for e in entries:
        for a in sorted(e.attrs):
            attr_map.setdefault(a, []).append(e.vertex)
    return NodeAttributeLists(q, frozenset(qa), entries, dict(sorted(attr_map.items())))


class PPFPNode:
    __slots__ = ("vertex", "occurrence", "prefix_attrs", "overall_attr_num", "parent", "children", "depth")

    def __init__(self, vertex: int, overall: int, parent: Optional["PPFPNode"], occurrence: int = 0):
        self.vertex = vertex
        self.occurrence = occurrence
        self.prefix_attrs: set = set()
        self.overall_attr_num = overall
        self.parent = parent
        self.children: Dict[int, PPFPNode] = {}
        self.depth = 0 if parent is None else parent.depth + 1

    @property
    def prefix_attr_num(self) -> int:
        return len(self.prefix_attrs)

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def as_tuple(self) -> Tuple[int, int, FrozenSet[int]]:
        return self.prefix_attr_num, self.overall_attr_num, frozenset(self.prefix_attrs)

    def __repr__(self) -> str:
        return f"P[{self.vertex}]_{self.occurrence}{self.as_tuple()}"


class PPFPTree:
    def __init__(self, query: int):
        self.root = PPFPNode(query, 0, None)
        self.node_links: Dict[int, List[PPFPNode]] = {}

    @property
    def query(self) -> int:
        return self.root.vertex

    def occurrence(self, v: int, x: int) -> PPFPNode:
        """The tree node ``P[v]_x`` (x counts from 1 in insertion order)."""
        return self.node_links[v][x - 1]

    def nodes(self) -> Iterator[PPFPNode]:
        """All non-root nodes, depth first, children in vertex order."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node is not self.root:
                yield node
            stack.extend(node.children[c] for c in sorted(node.children, reverse=True))

    def __len__(self) -> int:
        return sum(len(b) for b in self.node_links.values())

    def max_overall(self) -> int:
        return max((n.overall_attr_num for n in self.nodes()), default=0)

    def dump(self, names=None) -> str:
        """Indented text rendering, ``vertex prefix/overall {attrs}`` per line."""
        fmt = names or str
        lines = []
        for node in self.nodes():
            attrs = ",".join(sorted(fmt(a) for a in node.prefix_attrs))
            lines.append(f"{'  ' * (node.depth - 1)}{node.vertex} {node.prefix_attr_num}/{node.overall_attr_num} {{{attrs}}}")
        return "\n".join(lines)

    def to_bytes(self) -> bytes:
        """Compact encoding used to measure index size.

        Per node: vertex, parent slot (-1 for the root), overall count,
        number of prefix attributes, then the attribute ids.  All int32.
        An empty tree encodes to zero bytes.
        """
        if not self.node_links:
            return b""
        slot = {id(self.root): -1}
        out = bytearray(struct.pack("<ii", self.query, len(self)))
        for i, node in enumerate(self.nodes()):
            slot[id(node)] = i
            attrs = sorted(node.prefix_attrs)
            out += struct.pack(f"<iiii{len(attrs)}i", node.vertex, slot[id(node.parent)],
                               node.overall_attr_num, len(attrs), *attrs)
        return bytes(out)


def build_tree(lists: NodeAttributeLists, q: Optional[int] = None) -> PPFPTree:
    tree = PPFPTree(lists.query if q is None else q)
    overall = {e.vertex: e.count for e in lists.entries}
    for a in lists.attribute_order():
        r = tree.root
        for v in lists.attr_map[a]:
            child = r.children.get(v)
            if child is None:
                links = tree.node_links.setdefault(v, [])
                child = PPFPNode(v, overall[v], r, len(links) + 1)
                r.children[v] = child
                links.append(child)
            child.prefix_attrs.add(a)
            r = child
    return tree


def build_ppfp_tree(view, q: int) -> PPFPTree:
    return build_tree(extract_lists(view, q), q)


def prefix_path(node: PPFPNode) -> List[int]:
    """Vertices from the root's child down to ``node``; the root is excluded."""
    path = []
    while node.parent is not None:
        path.append(node.vertex)
        node = node.parent
    path.reverse()
    return path


@dataclass
class ConditionalTree:
    base_vertex: int
    cond_attrs: FrozenSet[int]
    counts: Dict[int, int] = field(default_factory=dict)
    pattern_base: List[Tuple[List[int], int]] = field(default_factory=list)

    def support(self, n: int) -> List[int]:
        """Vertices whose merged count reaches ``n``, in ascending id."""
        return sorted(u for u, c in self.counts.items() if c >= n)

    @property
    def trivial(self) -> bool:
        """Only the base vertex survived pruning."""
        return set(self.counts) <= {self.base_vertex}


def build_conditional(tree: PPFPTree, view, v: int) -> ConditionalTree:
    """Merge every prefix path ending at ``v`` into per-vertex counts.

    Each path is weighted by the prefix-attribute count of the occurrence of
    ``v`` that ends it; vertices not holding all of ``attr'(q) & attr'(v)``
    are pruned before merging.
    """
    occurrences = tree.node_links.get(v, [])
    qa = view.attrs(tree.query)
    cond = frozenset(qa & view.attrs(v))
    result = ConditionalTree(v, cond)
    keep: Dict[int, bool] = {}
    for node in occurrences:
        path = prefix_path(node)
        weight = node.prefix_attr_num
        result.pattern_base.append((path, weight))
        for u in path:
            ok = keep.get(u)
            if ok is None:
                ok = keep[u] = cond <= (view.attrs(u) & qa)
            if ok:
                result.counts[u] = result.counts.get(u, 0) + weight
    return result


def eligible_for_conditional(node: PPFPNode, ell: int, k: int, support: Optional[int] = None) -> bool:
    """Whether ``node`` qualifies for conditional-tree construction at ``ell`` required attributes.

    ``support`` replaces the single prefix-path length in the third test when
    the merged-support interpretation is enabled.
    """
    length = len(prefix_path(node)) if support is None else support
    return node.overall_attr_num >= ell and node.prefix_attr_num < ell and length >= k


def merged_support(tree: PPFPTree, v: int) -> int:
    """Distinct vertices over all prefix paths ending at ``v``."""
    seen = set()
    for node in tree.node_links.get(v, []):
        seen.update(prefix_path(node))
    return len(seen)
