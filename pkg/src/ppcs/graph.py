"""Public attributed graphs, private star-graph overlays and the merged per-query view.

Vertices are stored under dense internal ids ``0..n-1`` assigned in ascending
order of the external (file) id, so sorting by internal id and sorting by
external id agree.  Attribute strings are interned to integer ids the same way.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .errors import ContractViolation, GraphFormatError, RejectedInputError, UnknownVertexError

EMPTY: FrozenSet[int] = frozenset()


class AttributeDict:
    """Bijective attribute-string <-> integer-id map. Append-only."""

    def __init__(self, names: Iterable[str] = ()):
        self._names: List[str] = []
        self._ids: Dict[str, int] = {}
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        aid = self._ids.get(name)
        if aid is None:
            aid = len(self._names)
            self._names.append(name)
            self._ids[name] = aid
        return aid

    def id_of(self, name: str) -> int:
        return self._ids[name]

    def get(self, name: str, default: Optional[int] = None) -> Optional[int]:
        return self._ids.get(name, default)

    def name(self, aid: int) -> str:
        return self._names[aid]

    def names(self, ids: Iterable[int]) -> List[str]:
        return sorted(self._names[a] for a in ids)

    def ids(self, names: Iterable[str]) -> FrozenSet[int]:
        return frozenset(self._ids[n] for n in names)

    def copy(self) -> "AttributeDict":
        return AttributeDict(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._ids


class AttributedPublicGraph:
    """Undirected simple graph with a public attribute set on every vertex."""

    __slots__ = ("_ext", "_int", "_adj", "_attrs", "attr_dict", "_m")

    def __init__(
        self,
        vertex_ids: Sequence[int],
        adjacency: Sequence[FrozenSet[int]],
        public_attrs: Sequence[FrozenSet[int]],
        attr_dict: AttributeDict,
    ):
        n = len(vertex_ids)
        if len(adjacency) != n or len(public_attrs) != n:
            raise ContractViolation("vertex, adjacency and attribute tables differ in length")
        self._ext: Tuple[int, ...] = tuple(vertex_ids)
        self._int: Dict[int, int] = {x: i for i, x in enumerate(self._ext)}
        if len(self._int) != n:
            raise ContractViolation("duplicate external vertex id")
        self._adj: Tuple[FrozenSet[int], ...] = tuple(frozenset(a) for a in adjacency)
        self._attrs: Tuple[FrozenSet[int], ...] = tuple(frozenset(a) for a in public_attrs)
        self.attr_dict = attr_dict
        m2 = 0
        for v, nbrs in enumerate(self._adj):
            if v in nbrs:
                raise RejectedInputError(f"self-loop on vertex {self._ext[v]}")
            for u in nbrs:
                if not 0 <= u < n or v not in self._adj[u]:
                    raise ContractViolation(f"asymmetric adjacency between {v} and {u}")
            m2 += len(nbrs)
        self._m = m2 // 2

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[Tuple[int, int]],
        attrs: Optional[Mapping[int, Iterable[str]]] = None,
        nodes: Iterable[int] = (),
        attr_dict: Optional[AttributeDict] = None,
    ) -> "AttributedPublicGraph":
        """Build from external ids and attribute strings.

        Duplicate edges collapse; a self-loop raises :class:`RejectedInputError`.
        """
        edge_list = []
        ext = set(nodes)
        for u, v in edges:
            if u == v:
                raise RejectedInputError(f"self-loop on vertex {u}")
            edge_list.append((u, v))
            ext.add(u)
            ext.add(v)
        attrs = attrs or {}
        ext.update(attrs)
        if attr_dict is None:
            attr_dict = AttributeDict(sorted({a for names in attrs.values() for a in names}))
        order = sorted(ext)
        index = {x: i for i, x in enumerate(order)}
        adj: List[set] = [set() for _ in order]
        for u, v in edge_list:
            iu, iv = index[u], index[v]
            adj[iu].add(iv)
            adj[iv].add(iu)
        pattrs = [frozenset(attr_dict.intern(a) for a in attrs.get(x, ())) for x in order]
        return cls(order, [frozenset(a) for a in adj], pattrs, attr_dict)

    # -- queries ---------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self._ext)

    @property
    def num_edges(self) -> int:
        return self._m

    def nodes(self) -> range:
        return range(len(self._ext))

    def neighbors(self, v: int) -> FrozenSet[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def attrs(self, v: int) -> FrozenSet[int]:
        return self._attrs[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def edges(self) -> Iterator[Tuple[int, int]]:
        for u, nbrs in enumerate(self._adj):
            for v in sorted(nbrs):
                if u < v:
                    yield u, v

    def internal(self, ext_id: int) -> int:
        try:
            return self._int[ext_id]
        except KeyError:
            raise UnknownVertexError(ext_id) from None

    def external(self, v: int) -> int:
        return self._ext[v]

    def contains_external(self, ext_id: int) -> bool:
        return ext_id in self._int

    def fingerprint(self) -> int:
        """CRC32 over the canonical edge and attribute listing."""
        crc = zlib.crc32(b"")
        for line in dump_edges(self):
            crc = zlib.crc32(line.encode() + b"\n", crc)
        for line in dump_attrs(self):
            crc = zlib.crc32(line.encode() + b"\n", crc)
        return crc

    def __repr__(self) -> str:
        return f"AttributedPublicGraph(n={self.num_nodes}, m={self.num_edges}, attrs={len(self.attr_dict)})"


# -- loading -------------------------------------------------------------------

def _parse_vertex(token: str, line_no: int, source: Optional[str]) -> int:
    try:
        vid = int(token)
    except ValueError:
        raise GraphFormatError(f"bad vertex id {token!r}", line_no, source) from None
    if vid < 0:
        raise GraphFormatError(f"negative vertex id {vid}", line_no, source)
    return vid


def _content_lines(lines: Iterable[str]) -> Iterator[Tuple[int, str]]:
    for no, raw in enumerate(lines, 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield no, line


def parse_edges(lines: Iterable[str], source: Optional[str] = None) -> List[Tuple[int, int]]:
    edges = []
    for no, line in _content_lines(lines):
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected two vertex ids, got {line!r}", no, source)
        u = _parse_vertex(parts[0], no, source)
        v = _parse_vertex(parts[1], no, source)
        if u == v:
            raise RejectedInputError(f"{source or 'edges'}:{no}: self-loop on vertex {u}")
        edges.append((u, v))
    return edges


def parse_attrs(lines: Iterable[str], source: Optional[str] = None) -> Dict[int, set]:
    attrs: Dict[int, set] = {}
    for no, line in _content_lines(lines):
        parts = line.split(None, 1)
        vid = _parse_vertex(parts[0], no, source)
        names = attrs.setdefault(vid, set())
        if len(parts) == 2:
            for name in parts[1].split(","):
                name = name.strip()
                if not name:
                    raise GraphFormatError("empty attribute name", no, source)
                if any(c.isspace() for c in name):
                    raise GraphFormatError(f"whitespace inside attribute {name!r}", no, source)
                names.add(name)
    return attrs


def load_public_graph(
    edge_source: Iterable[str],
    attr_source: Iterable[str] = (),
    edge_name: Optional[str] = None,
    attr_name: Optional[str] = None,
) -> AttributedPublicGraph:
    """Parse an edge list and an attribute list into a public graph."""
    edges = parse_edges(edge_source, edge_name)
    attrs = parse_attrs(attr_source, attr_name)
    return AttributedPublicGraph.from_edges(edges, attrs)


def read_public_graph(edge_path, attr_path=None) -> AttributedPublicGraph:
    with open(edge_path, encoding="utf-8") as ef:
        if attr_path is None:
            return load_public_graph(ef, (), str(edge_path))
        with open(attr_path, encoding="utf-8") as af:
            return load_public_graph(ef, af, str(edge_path), str(attr_path))


def dump_edges(g: AttributedPublicGraph) -> Iterator[str]:
    pairs = sorted(tuple(sorted((g.external(u), g.external(v)))) for u, v in g.edges())
    for a, b in pairs:
        yield f"{a} {b}"


def dump_attrs(g: AttributedPublicGraph) -> Iterator[str]:
    """One line per vertex, including attribute-less ones so isolated vertices survive a round trip."""
    for v in g.nodes():
        names = g.attr_dict.names(g.attrs(v))
        yield f"{g.external(v)}\t{','.join(names)}" if names else f"{g.external(v)}"


# -- private overlays ----------------------------------------------------------

@dataclass(frozen=True)
class PrivateOverlay:
    """The private star-graph of ``owner``: hidden edges plus hidden attribute additions."""

    owner: int
    private_neighbors: FrozenSet[int] = EMPTY
    private_attrs: Mapping[int, FrozenSet[int]] = field(default_factory=dict)

    def attrs_of(self, v: int) -> FrozenSet[int]:
        return self.private_attrs.get(v, EMPTY)

    def validate(self, g: AttributedPublicGraph) -> None:
        if not 0 <= self.owner < g.num_nodes:
            raise RejectedInputError(f"overlay owner {self.owner} not in graph")
        if self.owner in self.private_neighbors:
            raise RejectedInputError(f"owner {g.external(self.owner)} listed as its own private neighbor")
        for u in self.private_neighbors:
            if not 0 <= u < g.num_nodes:
                raise RejectedInputError(f"private neighbor {u} not in graph")
            if g.has_edge(self.owner, u):
                raise RejectedInputError(
                    f"private edge ({g.external(self.owner)}, {g.external(u)}) is also public"
                )
        for v, extra in self.private_attrs.items():
            if not 0 <= v < g.num_nodes:
                raise RejectedInputError(f"private attributes on unknown vertex {v}")
            clash = extra & g.attrs(v)
            if clash:
                raise RejectedInputError(
                    f"vertex {g.external(v)}: private attributes {g.attr_dict.names(clash)} are also public"
                )


def load_private_overlays(
    source: Iterable[str], g: AttributedPublicGraph, source_name: Optional[str] = None
) -> Dict[int, PrivateOverlay]:
    """Parse ``P owner nbr`` / ``A owner vertex attr`` records into overlays keyed by internal owner id.

    Attribute names not yet known are interned into ``g.attr_dict``.
    """
    nbrs: Dict[int, set] = {}
    pattrs: Dict[int, Dict[int, set]] = {}
    where = source_name or "overlays"

    def vertex(token: str, no: int) -> int:
        ext = _parse_vertex(token, no, source_name)
        if not g.contains_external(ext):
            raise RejectedInputError(f"{where}:{no}: unknown vertex {ext}")
        return g.internal(ext)

    for no, line in _content_lines(source):
        parts = line.split()
        kind = parts[0]
        if kind == "P" and len(parts) == 3:
            owner, u = vertex(parts[1], no), vertex(parts[2], no)
            if owner == u:
                raise RejectedInputError(f"{where}:{no}: private self-loop on {parts[1]}")
            if g.has_edge(owner, u):
                raise RejectedInputError(f"{where}:{no}: private edge ({parts[1]}, {parts[2]}) is also public")
            nbrs.setdefault(owner, set()).add(u)
        elif kind == "A" and len(parts) == 4:
            owner, v = vertex(parts[1], no), vertex(parts[2], no)
            name = parts[3]
            aid = g.attr_dict.get(name)
            if aid is not None and aid in g.attrs(v):
                raise RejectedInputError(f"{where}:{no}: attribute {name!r} of vertex {parts[2]} is already public")
            aid = g.attr_dict.intern(name)
            pattrs.setdefault(owner, {}).setdefault(v, set()).add(aid)
        else:
            raise GraphFormatError(f"unrecognised overlay record {line!r}", no, source_name)

    overlays = {}
    for owner in sorted(set(nbrs) | set(pattrs)):
        overlays[owner] = PrivateOverlay(
            owner,
            frozenset(nbrs.get(owner, ())),
            {v: frozenset(a) for v, a in sorted(pattrs.get(owner, {}).items())},
        )
    return overlays


def read_private_overlays(path, g: AttributedPublicGraph) -> Dict[int, PrivateOverlay]:
    with open(path, encoding="utf-8") as fh:
        return load_private_overlays(fh, g, str(path))


def dump_overlays(overlays: Mapping[int, PrivateOverlay], g: AttributedPublicGraph) -> Iterator[str]:
    for owner in sorted(overlays, key=g.external):
        ov = overlays[owner]
        o = g.external(owner)
        for u in sorted(g.external(x) for x in ov.private_neighbors):
            yield f"P {o} {u}"
        for v in sorted(ov.private_attrs, key=g.external):
            for name in g.attr_dict.names(ov.private_attrs[v]):
                yield f"A {o} {g.external(v)} {name}"


def read_ground_truth(path, g: AttributedPublicGraph) -> List[FrozenSet[int]]:
    """SNAP ``cmty`` file: one community per line. Ids missing from ``g`` are dropped."""
    with open(path, encoding="utf-8") as fh:
        return load_ground_truth(fh, g, str(path))


def load_ground_truth(lines: Iterable[str], g: AttributedPublicGraph, source: Optional[str] = None) -> List[FrozenSet[int]]:
    out = []
    for no, line in _content_lines(lines):
        members = set()
        for tok in line.split():
            ext = _parse_vertex(tok, no, source)
            if g.contains_external(ext):
                members.add(g.internal(ext))
        if members:
            out.append(frozenset(members))
    return out


# -- per-query view ------------------------------------------------------------

class PPView:
    """Read-only union of the public graph and one owner's private star-graph."""

    __slots__ = ("base", "overlay", "query", "_qnbrs", "_pnbrs")

    def __init__(self, base: AttributedPublicGraph, query: int, overlay: Optional[PrivateOverlay] = None):
        if overlay is not None and overlay.owner != query:
            raise ContractViolation("overlay owner differs from the query vertex")
        self.base = base
        self.query = query
        self.overlay = overlay
        self._pnbrs = overlay.private_neighbors if overlay else EMPTY
        self._qnbrs = base.neighbors(query) | self._pnbrs

    @property
    def num_nodes(self) -> int:
        return self.base.num_nodes

    def nodes(self) -> range:
        return self.base.nodes()

    def neighbors(self, v: int) -> FrozenSet[int]:
        if v == self.query:
            return self._qnbrs
        if v in self._pnbrs:
            return self.base.neighbors(v) | {self.query}
        return self.base.neighbors(v)

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def attrs(self, v: int) -> FrozenSet[int]:
        if self.overlay is None:
            return self.base.attrs(v)
        extra = self.overlay.private_attrs.get(v)
        return self.base.attrs(v) | extra if extra else self.base.attrs(v)

    def private_attr_holders(self) -> FrozenSet[int]:
        return frozenset(self.overlay.private_attrs) if self.overlay else EMPTY


def pp_view(g: AttributedPublicGraph, overlays: Mapping[int, PrivateOverlay], q: int) -> PPView:
    if not isinstance(q, int) or not 0 <= q < g.num_nodes:
        raise UnknownVertexError(q)
    return PPView(g, q, overlays.get(q))


def common_attrs(view, members: Iterable[int]) -> FrozenSet[int]:
    """Attributes held by every member in ``view``."""
    it = iter(members)
    try:
        first = next(it)
    except StopIteration:
        raise ContractViolation("common_attrs needs at least one member") from None
    shared = set(view.attrs(first))
    for v in it:
        if not shared:
            break
        shared &= view.attrs(v)
    return frozenset(shared)


# -- results -------------------------------------------------------------------

ALGORITHMS = ("basic", "binary", "ppfp")


@dataclass(frozen=True)
class CommunityResult:
    query: int
    k: int
    members: FrozenSet[int]
    shared_attrs: FrozenSet[int]
    algorithm: str
    elapsed_ms: float = 0.0

    @classmethod
    def build(cls, view, q: int, k: int, members, algorithm: str, elapsed_ms: float = 0.0) -> "CommunityResult":
        members = frozenset(members or ())
        if members and q not in members:
            raise ContractViolation("community does not contain the query vertex")
        shared = common_attrs(view, members) if members else EMPTY
        return cls(q, k, members, shared, algorithm, elapsed_ms)

    @property
    def empty(self) -> bool:
        return not self.members

    def to_dict(self, g: AttributedPublicGraph) -> dict:
        return {
            "query": g.external(self.query),
            "k": self.k,
            "algo": self.algorithm,
            "members": sorted(g.external(v) for v in self.members),
            "shared_attrs": g.attr_dict.names(self.shared_attrs),
            "elapsed_ms": round(self.elapsed_ms, 3),
        }
