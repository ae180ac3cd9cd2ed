"""k-core machinery: coreness by bucket peeling, k-core extraction, components.

Every function accepts any object exposing ``nodes()`` and ``neighbors(v)``
(an :class:`AttributedPublicGraph` or a :class:`PPView`).
"""
from __future__ import annotations

from collections import deque
from typing import Dict, Iterable, List, Optional, Set

from .errors import ContractViolation

# Above this many members the induced subgraph is not materialised; neighbours
# are filtered through the alive set on the fly instead.
MATERIALIZE_LIMIT = 10_000


def compute_coreness(g, nodes: Optional[Iterable[int]] = None) -> Dict[int, int]:
    """Coreness of every vertex (restricted to the subgraph induced by ``nodes`` if given).

    Linear-time bin-sort peeling (Batagelj & Zaversnik).  Equal degrees are
    peeled in ascending vertex id.
    """
    verts = sorted(g.nodes() if nodes is None else set(nodes))
    if not verts:
        return {}
    local = {v: i for i, v in enumerate(verts)}
    if nodes is None:
        nbrs = [[local[u] for u in g.neighbors(v)] for v in verts]
    else:
        nbrs = [[local[u] for u in g.neighbors(v) if u in local] for v in verts]
    n = len(verts)
    deg = [len(a) for a in nbrs]
    max_deg = max(deg)

    bins = [0] * (max_deg + 1)
    for d in deg:
        bins[d] += 1
    start = 0
    for d in range(max_deg + 1):
        bins[d], start = start, start + bins[d]
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        pos[v] = bins[deg[v]]
        vert[pos[v]] = v
        bins[deg[v]] += 1
    for d in range(max_deg, 0, -1):
        bins[d] = bins[d - 1]
    bins[0] = 0

    for i in range(n):
        v = vert[i]
        dv = deg[v]
        for u in nbrs[v]:
            du = deg[u]
            if du > dv:
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bins[du] += 1
                deg[u] = du - 1
    return {verts[i]: deg[i] for i in range(n)}


def _peel(g, alive: Set[int], k: int) -> Set[int]:
    """Delete vertices of degree < k from ``alive`` (in place) until none remain."""
    if len(alive) <= MATERIALIZE_LIMIT:
        adj = {v: [u for u in g.neighbors(v) if u in alive] for v in alive}
        nbrs = adj.__getitem__
    else:
        adj = None
        nbrs = g.neighbors
    deg = {}
    queue = deque()
    for v in sorted(alive):
        d = len(adj[v]) if adj is not None else sum(1 for u in g.neighbors(v) if u in alive)
        deg[v] = d
        if d < k:
            queue.append(v)
    removed = set()
    while queue:
        v = queue.popleft()
        if v in removed:
            continue
        removed.add(v)
        alive.discard(v)
        for u in nbrs(v):
            if u in alive:
                deg[u] -= 1
                if deg[u] < k and u not in removed:
                    queue.append(u)
    return alive


def k_core(g, k: int, nodes: Optional[Iterable[int]] = None) -> Set[int]:
    """Vertex set of the (possibly disconnected) k-core of ``g``, or of ``g[nodes]``."""
    alive = set(g.nodes() if nodes is None else nodes)
    return _peel(g, alive, k)


def _component_of(g, q: int, alive: Set[int]) -> Set[int]:
    seen = {q}
    stack = [q]
    while stack:
        v = stack.pop()
        for u in g.neighbors(v):
            if u in alive and u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def connected_kcore_containing(g, members: Iterable[int], q: int, k: int) -> Optional[Set[int]]:
    """Connected component of q inside the k-core of ``g[members]``; None if q is peeled."""
    alive = set(members)
    if q not in alive:
        raise ContractViolation("query vertex must be among the members")
    if len(alive) < k + 1:
        return None
    _peel(g, alive, k)
    if q not in alive:
        return None
    comp = _component_of(g, q, alive)
    if len(comp) < k + 1:
        return None
    return comp


class DisjointSet:
    """Union-find with path halving and union by size."""

    def __init__(self, items: Iterable[int] = ()):
        self.parent: Dict[int, int] = {}
        self.size: Dict[int, int] = {}
        for x in items:
            self.add(x)

    def add(self, x: int) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def connected_components(g, nodes: Optional[Iterable[int]] = None) -> List[Set[int]]:
    """Maximal connected components, ordered by their smallest vertex id."""
    verts = list(g.nodes() if nodes is None else nodes)
    vset = set(verts)
    ds = DisjointSet(verts)
    for v in verts:
        for u in g.neighbors(v):
            if u > v and u in vset:
                ds.union(u, v)
    groups: Dict[int, Set[int]] = {}
    for v in verts:
        groups.setdefault(ds.find(v), set()).add(v)
    return sorted(groups.values(), key=min)
