"""Global coreness-tree index over the public graph.

One branch per connected component; inside a branch one tree node per
coreness value, each holding an attribute -> sorted-vertex-array map.
Only public attributes are indexed.
"""
from __future__ import annotations

import os
import struct
import tempfile
from array import array
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .core import compute_coreness, connected_components
from .errors import ContractViolation, IndexFormatError, UnknownVertexError

MAGIC = b"PPCT"
VERSION = 1


@dataclass
class TreeNode:
    t: int
    members: Tuple[int, ...]
    attr_map: Dict[int, Tuple[int, ...]] = field(default_factory=dict)


@dataclass
class Branch:
    component: frozenset
    levels: Dict[int, TreeNode] = field(default_factory=dict)

    def levels_from(self, k: int) -> List[TreeNode]:
        return [node for t, node in self.levels.items() if t >= k]


@dataclass
class CorenessTree:
    branches: List[Branch]
    vertex_to_branch: Dict[int, int]
    coreness: Dict[int, int]
    num_vertices: int = 0
    graph_fingerprint: int = 0

    def branch_of(self, v: int) -> Branch:
        try:
            return self.branches[self.vertex_to_branch[v]]
        except KeyError:
            raise UnknownVertexError(v) from None

    def __len__(self) -> int:
        return len(self.branches)


def build_coreness_tree(g) -> CorenessTree:
    coreness = compute_coreness(g)
    branches = []
    v2b = {}
    for comp in connected_components(g):
        by_level: Dict[int, List[int]] = {}
        for v in sorted(comp):
            by_level.setdefault(coreness[v], []).append(v)
        branch = Branch(frozenset(comp))
        for t in sorted(by_level):
            members = by_level[t]
            amap: Dict[int, List[int]] = {}
            for v in members:
                for a in g.attrs(v):
                    amap.setdefault(a, []).append(v)
            branch.levels[t] = TreeNode(t, tuple(members), {a: tuple(vs) for a, vs in sorted(amap.items())})
        for v in comp:
            v2b[v] = len(branches)
        branches.append(branch)
    fp = g.fingerprint() if hasattr(g, "fingerprint") else 0
    return CorenessTree(branches, v2b, coreness, g.num_nodes, fp)


def intersect_sorted(a: Sequence[int], b: Sequence[int]) -> List[int]:
    """Linear merge intersection of two ascending sequences."""
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x == y:
            out.append(x)
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return out


def expand_candidates(idx: CorenessTree, q: int, k: int, required_attrs: Iterable[int]) -> Set[int]:
    """Vertices of q's component with coreness >= k holding every attribute in ``required_attrs``."""
    required = sorted(set(required_attrs))
    if not required:
        raise ContractViolation("required_attrs must be nonempty")
    branch = idx.branch_of(q)
    out: Set[int] = set()
    for node in branch.levels_from(k):
        lists = []
        for a in required:
            vs = node.attr_map.get(a)
            if not vs:
                lists = None
                break
            lists.append(vs)
        if lists is None:
            continue
        lists.sort(key=len)
        acc = list(lists[0])
        for vs in lists[1:]:
            acc = intersect_sorted(acc, vs)
            if not acc:
                break
        out.update(acc)
    out.discard(q)
    return out


# -- serialization -------------------------------------------------------------
#
# Little-endian layout:
#   header  : b"PPCT" u32 version u32 graph_fingerprint u64 num_vertices u64 num_branches
#   branch  : u64 num_levels, then levels
#   level   : u64 t, i64-array members, u64 num_attrs, then (u64 attr, i64-array vertices)*
#   i64-array: u64 length followed by that many int64 values

def _put_array(out: bytearray, values: Sequence[int]) -> None:
    out += struct.pack("<Q", len(values))
    arr = array("q", values)
    if arr.itemsize != 8:  # pragma: no cover - exotic platforms
        raise RuntimeError("int64 array support required")
    if struct.pack("=H", 1) != struct.pack("<H", 1):  # pragma: no cover - big endian
        arr.byteswap()
    out += arr.tobytes()


def to_bytes(idx: CorenessTree) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<IIQQ", VERSION, idx.graph_fingerprint, idx.num_vertices, len(idx.branches))
    for branch in idx.branches:
        out += struct.pack("<Q", len(branch.levels))
        for t, node in branch.levels.items():
            out += struct.pack("<Q", t)
            _put_array(out, node.members)
            out += struct.pack("<Q", len(node.attr_map))
            for a, vs in node.attr_map.items():
                out += struct.pack("<Q", a)
                _put_array(out, vs)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise IndexFormatError("truncated index file")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals

    def array(self) -> Tuple[int, ...]:
        (n,) = self.take("<Q")
        end = self.pos + 8 * n
        if end > len(self.data):
            raise IndexFormatError("truncated index file")
        arr = array("q")
        arr.frombytes(self.data[self.pos:end].tobytes())
        if struct.pack("=H", 1) != struct.pack("<H", 1):  # pragma: no cover
            arr.byteswap()
        self.pos = end
        return tuple(arr)


def from_bytes(data: bytes) -> CorenessTree:
    if data[:4] != MAGIC:
        raise IndexFormatError("not a coreness-tree index (bad magic)")
    r = _Reader(data)
    r.pos = 4
    version, fp, n, nb = r.take("<IIQQ")
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    branches = []
    v2b = {}
    coreness = {}
    for bi in range(nb):
        (nl,) = r.take("<Q")
        levels = {}
        comp = set()
        for _ in range(nl):
            (t,) = r.take("<Q")
            members = r.array()
            (na,) = r.take("<Q")
            amap = {}
            for _ in range(na):
                (a,) = r.take("<Q")
                amap[a] = r.array()
            levels[t] = TreeNode(t, members, amap)
            for v in members:
                coreness[v] = t
                v2b[v] = bi
            comp.update(members)
        branches.append(Branch(frozenset(comp), levels))
    if r.pos != len(data):
        raise IndexFormatError("trailing bytes after index")
    return CorenessTree(branches, v2b, coreness, n, fp)


def save_index(idx: CorenessTree, path) -> int:
    """Write atomically (temp file + rename). Returns the byte size."""
    data = to_bytes(idx)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".ppct-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


def load_index(path, g=None) -> CorenessTree:
    with open(path, "rb") as fh:
        idx = from_bytes(fh.read())
    if g is not None and (idx.num_vertices != g.num_nodes or idx.graph_fingerprint != g.fingerprint()):
        raise IndexFormatError(f"index {path} was built for a different public graph")
    return idx
