"""Motion-estimation laboratory for plenoptic 2.0 (lenslet) video.

Modules: geometry (MLA lattice math), cost (block distortion), search
(the MCP-and-neighbors search and its baselines), synth (ground-truth
frame generator), metrics (accuracy and complexity measures), io (raw
video, configs, reports), cli (batch driver).
"""

from .cost import BlockRect, Frame, sad, ssd
from .geometry import (
    Candidate,
    MlaGeometry,
    OpticsMode,
    OpticsParams,
    Orientation,
    RingShape,
    SearchWindow,
    Stage,
    derive_matching_distance,
    diamond_ring,
    fast_mcp_agnostic,
    fast_mcp_count,
    fast_mcp_rings,
    mcp_lattice,
    mcp_lattice_count,
    neighbor_count,
    refinement_count,
    total_budget,
)
from .metrics import EvalRecord, StrategyOutcome, ape, asp, deviation_buckets, hit_rate_at_mcp
from .search import (
    STRATEGIES,
    SearchConfig,
    SearchResult,
    full_search,
    mcpns_search,
    mfme_search,
    mtss_like_search,
    refine_star,
    tzs_search,
)
from .synth import MotionSpec, SynthSpec, render_pair, render_reference

__version__ = "0.1.0"

__all__ = [
    "BlockRect",
    "Candidate",
    "EvalRecord",
    "Frame",
    "MlaGeometry",
    "MotionSpec",
    "OpticsMode",
    "OpticsParams",
    "Orientation",
    "RingShape",
    "STRATEGIES",
    "SearchConfig",
    "SearchResult",
    "SearchWindow",
    "Stage",
    "StrategyOutcome",
    "SynthSpec",
    "ape",
    "asp",
    "derive_matching_distance",
    "deviation_buckets",
    "diamond_ring",
    "fast_mcp_agnostic",
    "fast_mcp_count",
    "fast_mcp_rings",
    "full_search",
    "hit_rate_at_mcp",
    "mcp_lattice",
    "mcp_lattice_count",
    "mcpns_search",
    "mfme_search",
    "mtss_like_search",
    "neighbor_count",
    "refine_star",
    "refinement_count",
    "render_pair",
    "render_reference",
    "sad",
    "ssd",
    "total_budget",
    "tzs_search",
]
