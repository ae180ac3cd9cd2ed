"""Attributed community search on public-private graphs."""
from .core import compute_coreness, connected_components, connected_kcore_containing, k_core
from .errors import (
    ContractViolation,
    GraphFormatError,
    IndexFormatError,
    PPCSError,
    RejectedInputError,
    UnknownVertexError,
)
from .graph import (
    AttributedPublicGraph,
    CommunityResult,
    PPView,
    PrivateOverlay,
    common_attrs,
    load_private_overlays,
    load_public_graph,
    pp_view,
    read_private_overlays,
    read_public_graph,
)
from .ppfp import build_conditional, build_ppfp_tree, build_tree, eligible_for_conditional, extract_lists, prefix_path
from .public_index import CorenessTree, build_coreness_tree, expand_candidates
from .search import online_basic, online_binary, ppfp_search, validate_candidate

__version__ = "0.1.0"
