"""Query algorithms: exhaustive online search (linear and binary over the
shared-attribute count) and the indexed three-phase PP-FP search."""
from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .core import connected_kcore_containing, k_core
from .graph import EMPTY, CommunityResult, common_attrs
from .ppfp import (
    PPFPNode,
    build_conditional,
    build_ppfp_tree,
    eligible_for_conditional,
    merged_support,
    prefix_path,
)
from .public_index import CorenessTree, expand_candidates


@dataclass(frozen=True)
class CandidateSet:
    private_part: FrozenSet[int]
    public_part: FrozenSet[int]
    claimed_attrs: FrozenSet[int]

    @property
    def merged(self) -> FrozenSet[int]:
        return self.private_part | self.public_part


def _ms_since(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


# -- exhaustive online search --------------------------------------------------

class _SubsetSearch:
    """Shared state for the two online algorithms: the view's k-core and the
    per-attribute vertex sets inside it."""

    def __init__(self, view, q: int, k: int):
        self.view, self.q, self.k = view, q, k
        core = k_core(view, k)
        self.attrs: List[int] = sorted(view.attrs(q)) if q in core else []
        self.vsets: Dict[int, Set[int]] = {a: set() for a in self.attrs}
        if self.attrs:
            wanted = set(self.attrs)
            for v in core:
                for a in view.attrs(v) & wanted:
                    self.vsets[a].add(v)
        self.checks = 0

    def check(self, subset: Sequence[int]) -> Optional[Set[int]]:
        self.checks += 1
        sets = sorted((self.vsets[a] for a in subset), key=len)
        members = set(sets[0])
        for s in sets[1:]:
            members &= s
        if len(members) < self.k + 1:
            return None
        return connected_kcore_containing(self.view, members, self.q, self.k)

    def witness(self, d: int, first_only: bool = True) -> Optional[Set[int]]:
        found = None
        for subset in combinations(self.attrs, d):
            h = self.check(subset)
            if h is not None:
                found = h
                if first_only:
                    break
        return found


def online_basic(view, q: int, k: int, strict: bool = False) -> CommunityResult:
    """Grow the attribute-subset size d = 1, 2, ... until no size-d subset admits a
    connected k-core containing q.

    With ``strict`` every subset of a successful size is still checked (the
    last success wins); otherwise the first success ends that size.
    """
    t0 = time.perf_counter()
    search = _SubsetSearch(view, q, k)
    best = None
    for d in range(1, len(search.attrs) + 1):
        h = search.witness(d, first_only=not strict)
        if h is None:
            break
        best = h
    return CommunityResult.build(view, q, k, best, "basic", _ms_since(t0))


def feasible(view, q: int, k: int, d: int) -> bool:
    """Some size-d subset of q's attributes admits a connected k-core containing q."""
    search = _SubsetSearch(view, q, k)
    return 1 <= d <= len(search.attrs) and search.witness(d) is not None


def online_binary(view, q: int, k: int) -> CommunityResult:
    """Binary search for the largest feasible subset size, starting from the middle."""
    t0 = time.perf_counter()
    search = _SubsetSearch(view, q, k)
    lo, hi = 1, len(search.attrs)
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        h = search.witness(mid)
        if h is None:
            hi = mid - 1
        else:
            best = h
            # the witness may already share more than mid attributes
            lo = max(mid, len(common_attrs(view, h))) + 1
    return CommunityResult.build(view, q, k, best, "binary", _ms_since(t0))


# -- PP-FP search --------------------------------------------------------------

def public_candidates(view, q: int, k: int, claimed: FrozenSet[int], idx: CorenessTree) -> Set[int]:
    """Public expansion: index lookup plus the few vertices whose claimed
    attributes are partly private to q's view (the index cannot see those)."""
    found = expand_candidates(idx, q, k, claimed)
    holders = view.private_attr_holders()
    if holders:
        branch = idx.branch_of(q)
        for v in holders:
            if v != q and v in branch.component and idx.coreness.get(v, 0) >= k and claimed <= view.attrs(v):
                found.add(v)
    return found


def validate_candidate(
    view, q: int, k: int, private_part: Iterable[int], claimed: Iterable[int], idx: CorenessTree
) -> Tuple[Optional[Set[int]], CandidateSet]:
    """Expand one candidate through the public index and peel it in the view.
    Returns (community or None, the candidate)."""
    claimed = frozenset(claimed)
    private_part = frozenset(private_part) - {q}
    public_part = frozenset(public_candidates(view, q, k, claimed, idx)) if claimed else EMPTY
    cand = CandidateSet(private_part, public_part, claimed)
    s = cand.merged
    if len(s) + 1 < k + 1:
        return None, cand
    # Dropping attribute-deficient members before peeling gives the same
    # k-core as peeling, filtering and re-peeling.
    members = {v for v in s if claimed <= view.attrs(v)}
    members.add(q)
    return connected_kcore_containing(view, members, q, k), cand


def _deepest_at_least(tree, n: int) -> List[PPFPNode]:
    out = []
    stack = [c for c in tree.root.children.values() if c.prefix_attr_num >= n]
    while stack:
        node = stack.pop()
        deeper = [c for c in node.children.values() if c.prefix_attr_num >= n]
        if deeper:
            stack.extend(deeper)
        else:
            out.append(node)
    return out


def _node_order(node: PPFPNode):
    return (-node.prefix_attr_num, node.vertex, node.occurrence)


def ppfp_search(
    view,
    q: int,
    k: int,
    public_idx: CorenessTree,
    allow_plain_core: bool = False,
    conditional_support_merged: bool = False,
    trace: Optional[list] = None,
) -> CommunityResult:
    """Indexed search: candidate attribute sets come from the PP-FP-tree, are
    expanded through the public coreness tree and validated by k-core
    peeling in q's view.

    ``trace``, if a list, receives one dict per candidate considered.
    """
    t0 = time.perf_counter()
    tree = build_ppfp_tree(view, q)
    qa = view.attrs(q)
    tried: Set[Tuple[FrozenSet[int], FrozenSet[int]]] = set()

    def attempt(n: int, kind: str, vertex: int, private: Sequence[int], claimed) -> Optional[Set[int]]:
        private = frozenset(private)
        claimed = frozenset(claimed)
        record = {"N": n, "kind": kind, "vertex": vertex, "private": sorted(private),
                  "claimed": sorted(claimed), "validated": False, "members": None}
        if trace is not None:
            trace.append(record)
        if len(private) < k or not claimed:
            return None
        key = (private, claimed)
        if key in tried:
            return None
        tried.add(key)
        record["validated"] = True
        h, cand = validate_candidate(view, q, k, private, claimed, public_idx)
        record["public"] = sorted(cand.public_part)
        if h is not None:
            record["members"] = sorted(h)
        return h

    def level(n: int) -> Optional[Set[int]]:
        for node in sorted(_deepest_at_least(tree, n), key=_node_order):
            h = attempt(n, "path", node.vertex, prefix_path(node), node.prefix_attrs)
            if h is not None:
                return h
        seen = set()
        for node in sorted(tree.nodes(), key=_node_order):
            if node.vertex in seen:
                continue
            support = merged_support(tree, node.vertex) if conditional_support_merged else None
            if not eligible_for_conditional(node, n, k, support):
                continue
            seen.add(node.vertex)
            cond = build_conditional(tree, view, node.vertex)
            private = cond.support(n)
            claimed = set(cond.cond_attrs)
            for u in private:
                claimed &= view.attrs(u)
            h = attempt(n, "conditional", node.vertex, private, claimed & qa)
            if h is not None:
                return h
        return None

    best = None
    n = tree.max_overall()
    while n > 1 and best is None:
        best = level(n)
        n -= 1
    if best is None and allow_plain_core:
        if tree.max_overall() >= 1:
            best = level(1)
        if best is None:
            best = connected_kcore_containing(view, view.nodes(), q, k)
    return CommunityResult.build(view, q, k, best, "ppfp", _ms_since(t0))


def run_algorithm(name: str, view, q: int, k: int, public_idx: Optional[CorenessTree] = None, **flags) -> CommunityResult:
    if name == "basic":
        return online_basic(view, q, k, strict=flags.get("strict_paper_mode", False))
    if name == "binary":
        return online_binary(view, q, k)
    if name == "ppfp":
        if public_idx is None:
            raise ValueError("ppfp needs a public coreness-tree index")
        return ppfp_search(
            view, q, k, public_idx,
            allow_plain_core=flags.get("allow_plain_core", False),
            conditional_support_merged=flags.get("conditional_support_merged", False),
        )
    raise ValueError(f"unknown algorithm {name!r}")
