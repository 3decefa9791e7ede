"""Pluggable motion-search strategies over one shared contract.

Implements the MCP-and-neighbors fast search (mcpns_search) next to the
baselines it is measured against: exhaustive full search (the accuracy
oracle), a simplified test-zone search, the all-MCP search with square
refinement, and the matching-distance two-step variant.

Every strategy evaluates integer MVs restricted to the same feasible set:
inside the Chebyshev window around the predicted MV and keeping the
displaced block inside the reference frame.  Ties are always broken by
first evaluation, so results are deterministic and independent of thread
count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cost import BlockRect, Frame, mv_feasible
from .errors import EmptyFeasibleSetError
from .geometry import (
    Candidate,
    MlaGeometry,
    Orientation,
    RingShape,
    SearchWindow,
    Stage,
    diamond_distances,
    diamond_ring,
    fast_mcp_agnostic,
    mcp_lattice,
    round_px,
)


@dataclass
class SearchConfig:
    """Knobs shared by all strategies; instances are never mutated by searches."""

    half_width: int = 64
    d: float = 23.0
    shape: RingShape = RingShape.RHOMBUS
    top_k: int = 16
    matching_distance: float | None = None  # s, used by mtss_like_search only
    orientation_known: Orientation | None = None  # required by mfme / mtss
    block_w: int = 16
    block_h: int = 16
    early_termination: bool = True
    raster_threshold: int = 5  # tzs only
    square_radius: int = 2  # mfme refinement reach
    cost: str = "sad"
    enable_neighbors: bool = True  # ablation switch for the neighbors stage
    refine_recenter_cap: int = 8
    round_diameter: bool = False  # snap d to an integer before deriving patterns
    odd_row_offset_sign: int = 1

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError(f"half_width must be >= 1, got {self.half_width}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.cost not in ("sad", "ssd"):
            raise ValueError(f"unknown cost function {self.cost!r}")

    @property
    def effective_d(self) -> float:
        return float(round_px(self.d)) if self.round_diameter else float(self.d)


@dataclass
class SearchResult:
    best_mv: Candidate
    best_cost: int
    points_evaluated: int
    stage_of_best: Stage
    trace: list[tuple[Candidate, int]] | None = None
    refine_passes: int = 0


class SearchState:
    """Evaluation bookkeeping shared by the stepwise strategies.

    Counts every feasible evaluation (revisits included), keeps the
    running best with strict-improvement updates, and optionally records
    the full (candidate, cost) trace.
    """

    def __init__(
        self,
        cur: Frame,
        ref: Frame,
        block: BlockRect,
        pmv: Candidate,
        cfg: SearchConfig,
        trace: bool = False,
    ):
        if not block.inside(cur):
            raise ValueError(f"block {block} not inside the current frame")
        self.cur = cur
        self.ref = ref
        self.block = block
        self.pmv = pmv
        self.cfg = cfg
        self.window = SearchWindow(cfg.half_width, Candidate(pmv.x, pmv.y))
        self._squared = cfg.cost == "ssd"
        dt = np.int64 if self._squared else np.int16
        self._blk = block.pixels(cur).astype(dt)
        self.best: Candidate | None = None
        self.best_cost: int | None = None
        self.points = 0
        self.improvements = 0
        self.trace: list[tuple[Candidate, int]] | None = [] if trace else None

    def feasible(self, x: int, y: int) -> bool:
        return self.window.contains(x, y) and mv_feasible(self.ref, self.block, x, y)

    def evaluate(self, x: int, y: int, stage: Stage) -> int | None:
        """Cost at (x, y), or None when the candidate is infeasible (not counted)."""
        if not self.feasible(x, y):
            return None
        b = self.block
        sx = b.x0 + x
        sy = b.y0 + y
        patch = self.ref.luma[sy : sy + b.bh, sx : sx + b.bw]
        if self._squared:
            diff = self._blk - patch.astype(np.int64)
            cost = int((diff * diff).sum())
        else:
            diff = self._blk - patch.astype(np.int16)
            cost = int(np.abs(diff, dtype=np.int16).sum(dtype=np.int64))
        self.points += 1
        cand = Candidate(x, y, stage)
        if self.trace is not None:
            self.trace.append((cand, cost))
        if self.best_cost is None or cost < self.best_cost:
            self.best = cand
            self.best_cost = cost
            self.improvements += 1
        return cost

    def evaluate_candidates(self, cands: list[Candidate]) -> None:
        for c in cands:
            self.evaluate(c.x, c.y, c.stage)

    def result(self, refine_passes: int = 0) -> SearchResult:
        if self.best is None or self.best_cost is None:
            raise EmptyFeasibleSetError(
                f"no feasible MV for block {self.block} within the search window"
            )
        return SearchResult(
            best_mv=self.best,
            best_cost=self.best_cost,
            points_evaluated=self.points,
            stage_of_best=self.best.stage,
            trace=self.trace,
            refine_passes=refine_passes,
        )


def _seed_centers(state: SearchState) -> list[Candidate]:
    """The predicted MV and the zero MV, deduplicated."""
    seeds = [Candidate(state.pmv.x, state.pmv.y, Stage.CENTER)]
    if (state.pmv.x, state.pmv.y) != (0, 0):
        seeds.append(Candidate(0, 0, Stage.CENTER))
    return seeds


def full_search(
    cur: Frame,
    ref: Frame,
    block: BlockRect,
    pmv: Candidate,
    cfg: SearchConfig,
    trace: bool = False,
) -> SearchResult:
    """Exhaustive raster-order scan of the feasible window; the accuracy oracle.

    Ties go to the first candidate in raster order (y outer, x inner,
    top-left of the window first).
    """
    if not block.inside(cur):
        raise ValueError(f"block {block} not inside the current frame")
    w = cfg.half_width
    x_lo = max(pmv.x - w, -block.x0)
    x_hi = min(pmv.x + w, ref.width - block.bw - block.x0)
    y_lo = max(pmv.y - w, -block.y0)
    y_hi = min(pmv.y + w, ref.height - block.bh - block.y0)
    if x_lo > x_hi or y_lo > y_hi:
        raise EmptyFeasibleSetError(
            f"no feasible MV for block {block} within the search window"
        )
    nx = x_hi - x_lo + 1
    ny = y_hi - y_lo + 1
    squared = cfg.cost == "ssd"
    blk = block.pixels(cur).astype(np.int64 if squared else np.int16)
    region = ref.luma[
        block.y0 + y_lo : block.y0 + y_hi + block.bh,
        block.x0 + x_lo : block.x0 + x_hi + block.bw,
    ]
    costs = np.empty((ny, nx), dtype=np.int64)
    for iy in range(ny):
        band = region[iy : iy + block.bh]
        windows = sliding_window_view(band, (block.bh, block.bw))[0]
        if squared:
            diff = windows.astype(np.int64) - blk
            costs[iy] = (diff * diff).sum(axis=(1, 2))
        else:
            diff = windows.astype(np.int16) - blk
            costs[iy] = np.abs(diff).sum(axis=(1, 2), dtype=np.int64)
    flat = int(np.argmin(costs))
    by, bx = divmod(flat, nx)
    best = Candidate(x_lo + bx, y_lo + by, Stage.RASTER)
    out_trace = None
    if trace:
        out_trace = [
            (Candidate(x_lo + ix, y_lo + iy, Stage.RASTER), int(costs[iy, ix]))
            for iy in range(ny)
            for ix in range(nx)
        ]
    return SearchResult(
        best_mv=best,
        best_cost=int(costs[by, bx]),
        points_evaluated=nx * ny,
        stage_of_best=Stage.RASTER,
        trace=out_trace,
    )


def refine_star(
    state: SearchState,
    center: Candidate,
    d: float,
    region_center: Candidate | None = None,
    region_radius: int | None = None,
) -> int:
    """Star refinement: expanding-diamond passes that re-center on improvement.

    Each pass runs the full distance schedule 1, 2, 4, ..., 2^(N-1) around
    a fixed center; if the global best improved, the next pass re-centers
    there, up to the configured re-centering cap.  With a region, only
    candidates within Chebyshev `region_radius` of `region_center` are
    evaluated.  Returns the number of passes run; `state` carries the
    updated best and counters.
    """
    distances = diamond_distances(d)
    cur_center = center
    passes = 0
    recenters = 0
    while True:
        passes += 1
        before = state.improvements
        for dist in distances:
            ring = diamond_ring(cur_center, dist, first_loop=(dist == 1), stage=Stage.REFINEMENT)
            for c in ring:
                if region_center is not None and region_radius is not None:
                    if max(abs(c.x - region_center.x), abs(c.y - region_center.y)) > region_radius:
                        continue
                state.evaluate(c.x, c.y, Stage.REFINEMENT)
        if state.improvements == before:
            break
        if recenters >= state.cfg.refine_recenter_cap:
            break
        assert state.best is not None
        recenters += 1
        cur_center = Candidate(state.best.x, state.best.y)
    return passes


def tzs_search(
    cur: Frame,
    ref: Frame,
    block: BlockRect,
    pmv: Candidate,
    cfg: SearchConfig,
    trace: bool = False,
) -> SearchResult:
    """Simplified test-zone search: start set, expanding diamonds, conditional
    raster at a fixed stride, then star refinement.

    This is the conventional-video baseline; its pixel-level center bias is
    exactly what macropixel-scale motion defeats.
    """
    state = SearchState(cur, ref, block, pmv, cfg, trace)
    state.evaluate_candidates(_seed_centers(state))
    if state.best is None:
        raise EmptyFeasibleSetError(f"no feasible MV for block {block}")
    start = Candidate(state.best.x, state.best.y)
    best_distance = 0
    dist = 1
    while dist <= cfg.half_width:
        before = state.improvements
        ring = diamond_ring(start, dist, first_loop=False, stage=Stage.NEIGHBOR_DIAMOND)
        for c in ring:
            state.evaluate(c.x, c.y, Stage.NEIGHBOR_DIAMOND)
        if state.improvements > before:
            best_distance = dist
        dist *= 2
    if best_distance > cfg.raster_threshold:
        stride = cfg.raster_threshold
        for y in range(-cfg.half_width, cfg.half_width + 1, stride):
            for x in range(-cfg.half_width, cfg.half_width + 1, stride):
                state.evaluate(pmv.x + x, pmv.y + y, Stage.RASTER)
    assert state.best is not None
    passes = refine_star(state, Candidate(state.best.x, state.best.y), cfg.effective_d)
    return state.result(refine_passes=passes)


def mfme_search(
    cur: Frame,
    ref: Frame,
    block: BlockRect,
    pmv: Candidate,
    cfg: SearchConfig,
    trace: bool = False,
) -> SearchResult:
    """All-MCP search with a square refinement: the plenoptic-1.0 baseline.

    Requires a known MLA orientation; feeding the wrong one reproduces its
    no-prior-information failure mode.
    """
    if cfg.orientation_known is None:
        raise ValueError("mfme_search needs cfg.orientation_known")
    state = SearchState(cur, ref, block, pmv, cfg, trace)
    state.evaluate_candidates(_seed_centers(state))
    geom = MlaGeometry(cfg.effective_d, cfg.orientation_known, cfg.odd_row_offset_sign)
    state.evaluate_candidates(mcp_lattice(geom, state.window))
    if state.best is None:
        raise EmptyFeasibleSetError(f"no feasible MV for block {block}")
    b = state.best
    r = cfg.square_radius
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dx == 0 and dy == 0:
                continue
            state.evaluate(b.x + dx, b.y + dy, Stage.REFINEMENT)
    return state.result()


def mtss_like_search(
    cur: Frame,
    ref: Frame,
    block: BlockRect,
    pmv: Candidate,
    cfg: SearchConfig,
    trace: bool = False,
) -> SearchResult:
    """Two-step baseline: MCP pass, fixed matching-distance candidates at the
    best MCP, then star refinement limited to a d-radius region.

    The matching distance s is a single per-sequence constant, which is the
    weakness the neighbors search removes.
    """
    if cfg.orientation_known is None:
        raise ValueError("mtss_like_search needs cfg.orientation_known")
    if cfg.matching_distance is None:
        raise ValueError("mtss_like_search needs cfg.matching_distance (s)")
    state = SearchState(cur, ref, block, pmv, cfg, trace)
    state.evaluate_candidates(_seed_centers(state))
    geom = MlaGeometry(cfg.effective_d, cfg.orientation_known, cfg.odd_row_offset_sign)
    state.evaluate_candidates(mcp_lattice(geom, state.window))
    if state.best is None:
        raise EmptyFeasibleSetError(f"no feasible MV for block {block}")
    anchor = state.best
    s = round_px(cfg.matching_distance)
    if s != 0:
        offsets = [(s, 0), (-s, 0), (0, s), (0, -s), (s, s), (-s, s), (-s, -s), (s, -s)]
        for ox, oy in offsets:
            state.evaluate(anchor.x + ox, anchor.y + oy, Stage.NEIGHBOR_DIAMOND)
    assert state.best is not None
    start = Candidate(state.best.x, state.best.y)
    d_px = round_px(cfg.effective_d)
    passes = refine_star(
        state, start, cfg.effective_d, region_center=start, region_radius=d_px
    )
    return state.result(refine_passes=passes)


def mcpns_search(
    cur: Frame,
    ref: Frame,
    block: BlockRect,
    pmv: Candidate,
    cfg: SearchConfig,
    trace: bool = False,
) -> SearchResult:
    """MCP-and-neighbors fast search.

    Stages: (1) seed the predicted and zero MVs; (2) orientation-agnostic
    fast MCP pass over both lattice layouts; (3) keep the K evaluated
    candidates with the lowest cost; (4) fixed-center expanding-diamond
    neighbor search at each of the K anchors, with optional early
    termination of an anchor after the 8-pixel loop brings no new best;
    (5) star refinement around the global best.
    """
    state = SearchState(cur, ref, block, pmv, cfg, trace)
    d = cfg.effective_d
    pool: list[tuple[int, Candidate]] = []
    for c in _seed_centers(state):
        cost = state.evaluate(c.x, c.y, c.stage)
        if cost is not None:
            pool.append((cost, c))
    fast = fast_mcp_agnostic(d, state.window, cfg.shape, cfg.odd_row_offset_sign)
    for c in fast:
        cost = state.evaluate(c.x, c.y, c.stage)
        if cost is not None:
            pool.append((cost, c))
    if state.best is None:
        raise EmptyFeasibleSetError(f"no feasible MV for block {block}")
    if cfg.enable_neighbors:
        pool.sort(key=lambda entry: entry[0])  # stable: ties keep evaluation order
        anchors = [c for _, c in pool[: cfg.top_k]]
        distances = diamond_distances(d)
        for anchor in anchors:
            anchor_start = state.improvements
            for dist in distances:
                ring = diamond_ring(
                    anchor, dist, first_loop=(dist == 1), stage=Stage.NEIGHBOR_DIAMOND
                )
                for c in ring:
                    state.evaluate(c.x, c.y, Stage.NEIGHBOR_DIAMOND)
                # early termination fires once the anchor's 8-pixel
                # surrounding window is fully covered, which happens at the
                # end of the distance-16 loop (its corners sit at +-8, +-8);
                # only the loops beyond that window are abortable
                if (
                    cfg.early_termination
                    and dist == 16
                    and state.improvements == anchor_start
                ):
                    break
    assert state.best is not None
    passes = refine_star(state, Candidate(state.best.x, state.best.y), d)
    return state.result(refine_passes=passes)


STRATEGIES = {
    "fs": full_search,
    "tzs": tzs_search,
    "mfme": mfme_search,
    "mtss": mtss_like_search,
    "mcpns": mcpns_search,
}
