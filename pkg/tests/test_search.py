"""Search strategies: spec'd examples, shared invariants, and the documented
failure modes of each baseline on macropixel-scale motion."""

import numpy as np
import pytest

from plenome.cost import BlockRect, Frame
from plenome.errors import EmptyFeasibleSetError
from plenome.geometry import (
    Candidate,
    Orientation,
    SearchWindow,
    Stage,
    fast_mcp_agnostic,
    neighbor_count,
    refinement_count,
)
from plenome.search import (
    STRATEGIES,
    SearchConfig,
    SearchState,
    full_search,
    mcpns_search,
    mfme_search,
    mtss_like_search,
    refine_star,
    tzs_search,
)
from plenome.synth import MotionSpec, SynthSpec, render_pair

PMV0 = Candidate(0, 0)
CENTER_BLOCK = BlockRect(248, 248, 16, 16)


def make_pair(d=23.0, shift=(1, 0), dev=(0, 0), seed=5, size=512,
              orientation=Orientation.HORIZONTAL, noise=0.0):
    spec = SynthSpec(
        width=size, height=size, d=d, orientation=orientation, texture_seed=seed,
        motion=MotionSpec(shift, dev), noise_sigma=noise,
    )
    return render_pair(spec)


def shifted_frames(shift=(7, -3), seed=11, size=96):
    """Plain random-texture pair with an exact known displacement."""
    rng = np.random.default_rng(seed)
    canvas = rng.integers(0, 256, size=(size + 32, size + 32), dtype=np.uint8)
    ref = Frame(canvas[16 : 16 + size, 16 : 16 + size].copy())
    cur = Frame(
        canvas[16 + shift[1] : 16 + shift[1] + size, 16 + shift[0] : 16 + shift[0] + size].copy()
    )
    return cur, ref


class TestFullSearch:
    def test_identity_frame(self):
        cur, ref, _ = make_pair(shift=(0, 0))
        res = full_search(cur, ref, CENTER_BLOCK, PMV0, SearchConfig(half_width=16))
        assert (res.best_mv.x, res.best_mv.y) == (0, 0)
        assert res.best_cost == 0

    def test_recovers_known_shift(self):
        cur, ref = shifted_frames((7, -3))
        res = full_search(cur, ref, BlockRect(40, 40, 16, 16), PMV0, SearchConfig(half_width=8))
        assert (res.best_mv.x, res.best_mv.y) == (7, -3)
        assert res.best_cost == 0

    def test_interior_point_count(self):
        cur, ref = shifted_frames((0, 0))
        cfg = SearchConfig(half_width=8)
        res = full_search(cur, ref, BlockRect(40, 40, 16, 16), PMV0, cfg)
        assert res.points_evaluated == (2 * 8 + 1) ** 2

    def test_edge_clipping_reduces_points(self):
        cur, ref = shifted_frames((0, 0))
        cfg = SearchConfig(half_width=8)
        res = full_search(cur, ref, BlockRect(0, 0, 16, 16), PMV0, cfg)
        assert res.points_evaluated == 9 * 9  # only non-negative displacements fit

    def test_raster_tie_break_on_flat_frames(self):
        flat = Frame(np.full((64, 64), 77, dtype=np.uint8))
        cfg = SearchConfig(half_width=4)
        res = full_search(flat, flat, BlockRect(24, 24, 8, 8), PMV0, cfg)
        # every candidate costs 0; raster order reaches the top-left first
        assert (res.best_mv.x, res.best_mv.y) == (-4, -4)

    def test_empty_feasible_set(self):
        cur, ref = shifted_frames((0, 0))
        cfg = SearchConfig(half_width=4)
        with pytest.raises(EmptyFeasibleSetError):
            full_search(cur, ref, BlockRect(0, 0, 16, 16), Candidate(-20, 0), cfg)

    def test_trace_matches_points(self):
        cur, ref = shifted_frames((2, 1))
        cfg = SearchConfig(half_width=6)
        res = full_search(cur, ref, BlockRect(40, 40, 8, 8), PMV0, cfg, trace=True)
        assert len(res.trace) == res.points_evaluated
        # trace is raster ordered and contains the best
        assert min(cost for _, cost in res.trace) == res.best_cost

    def test_vectorized_matches_scalar_cost_map(self):
        from plenome.cost import sad

        cur, ref = shifted_frames((3, 2), seed=9, size=64)
        cfg = SearchConfig(half_width=5)
        block = BlockRect(24, 24, 8, 8)
        res = full_search(cur, ref, block, PMV0, cfg, trace=True)
        for cand, cost in res.trace:
            assert cost == sad(cur, ref, block, cand)

    def test_ssd_cost_hook(self):
        cur, ref = shifted_frames((4, 1))
        cfg = SearchConfig(half_width=6, cost="ssd")
        res = full_search(cur, ref, BlockRect(40, 40, 8, 8), PMV0, cfg)
        assert (res.best_mv.x, res.best_mv.y) == (4, 1)
        assert res.best_cost == 0


class TestRefineStar:
    def _state(self, cur, ref, block, cfg):
        return SearchState(cur, ref, block, PMV0, cfg)

    def test_already_optimal_costs_one_pass(self):
        cur, ref = shifted_frames((0, 0))
        cfg = SearchConfig(half_width=16, d=23.0)
        state = self._state(cur, ref, BlockRect(40, 40, 16, 16), cfg)
        state.evaluate(0, 0, Stage.CENTER)
        passes = refine_star(state, Candidate(0, 0), 23.0)
        assert passes == 1
        assert state.points == 1 + refinement_count(23)
        assert (state.best.x, state.best.y) == (0, 0)

    def test_finds_neighbor_optimum_in_first_small_diamond(self):
        cur, ref = shifted_frames((1, 0))
        cfg = SearchConfig(half_width=16, d=23.0)
        state = self._state(cur, ref, BlockRect(40, 40, 16, 16), cfg)
        state.evaluate(0, 0, Stage.CENTER)
        refine_star(state, Candidate(0, 0), 23.0)
        assert (state.best.x, state.best.y) == (1, 0)
        assert state.best_cost == 0

    def test_reaches_diagonal_via_distance_4_corner(self):
        cur, ref = shifted_frames((2, 2))
        cfg = SearchConfig(half_width=16, d=23.0)
        state = self._state(cur, ref, BlockRect(40, 40, 16, 16), cfg)
        state.evaluate(0, 0, Stage.CENTER)
        refine_star(state, Candidate(0, 0), 23.0)
        assert (state.best.x, state.best.y) == (2, 2)
        assert state.best_cost == 0

    def test_region_limit_respected(self):
        cur, ref = shifted_frames((6, 0))
        cfg = SearchConfig(half_width=16, d=23.0)
        state = SearchState(cur, ref, BlockRect(40, 40, 16, 16), PMV0, cfg, trace=True)
        state.evaluate(0, 0, Stage.CENTER)
        refine_star(state, Candidate(0, 0), 23.0, region_center=Candidate(0, 0), region_radius=2)
        for cand, _ in state.trace:
            assert max(abs(cand.x), abs(cand.y)) <= 2


class TestTzs:
    def test_identity(self):
        cur, ref, _ = make_pair(shift=(0, 0))
        res = tzs_search(cur, ref, CENTER_BLOCK, PMV0, SearchConfig(half_width=16, d=23.0))
        assert (res.best_mv.x, res.best_mv.y) == (0, 0)
        assert res.best_cost == 0

    def test_small_shift_found_by_first_diamonds(self):
        cur, ref = shifted_frames((1, 1))
        res = tzs_search(cur, ref, BlockRect(40, 40, 16, 16), PMV0,
                         SearchConfig(half_width=8, d=23.0))
        assert (res.best_mv.x, res.best_mv.y) == (1, 1)

    def test_macropixel_shift_traps_tzs(self):
        # pure one-row lattice shift: the zero MV is a secondary minimum that
        # the pixel-level diamonds never escape (seed chosen to show the
        # typical failure; some textures let the raster stage recover)
        cur, ref, truth = make_pair(d=23.0, shift=(0, -1), seed=1)
        cfg = SearchConfig(half_width=64, d=23.0)
        fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        tz = tzs_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        assert (fs.best_mv.x, fs.best_mv.y) == (truth.x, truth.y)
        assert tz.best_cost > fs.best_cost

    def test_raster_stage_triggers_on_distant_best(self):
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), seed=5)
        cfg = SearchConfig(half_width=64, d=23.0, raster_threshold=5)
        res = tzs_search(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
        stages = {c.stage for c, _ in res.trace}
        assert Stage.RASTER in stages


class TestMfme:
    def test_requires_orientation(self):
        cur, ref, _ = make_pair()
        with pytest.raises(ValueError):
            mfme_search(cur, ref, CENTER_BLOCK, PMV0, SearchConfig(half_width=32, d=23.0))

    def test_lattice_motion_completeness(self):
        # FS optimum on an MCP point: MFME must match the oracle cost
        for shift in [(1, 0), (0, 1), (-1, 1), (0, 2), (1, 2)]:
            cur, ref, truth = make_pair(d=23.0, shift=shift, seed=8)
            cfg = SearchConfig(half_width=64, d=23.0,
                               orientation_known=Orientation.HORIZONTAL)
            fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
            mf = mfme_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
            assert (fs.best_mv.x, fs.best_mv.y) == (truth.x, truth.y)
            assert mf.best_cost == fs.best_cost

    def test_deviation_beyond_square_radius_fails(self):
        # deviation (5, 0) is out of reach of the +-2 square refinement
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), dev=(5, 0), seed=1)
        cfg = SearchConfig(half_width=64, d=23.0, orientation_known=Orientation.HORIZONTAL)
        fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        mf = mfme_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        assert mf.best_cost > fs.best_cost

    def test_small_window_degenerates_to_center_plus_square(self):
        cur, ref, _ = make_pair(d=23.0, shift=(0, 0), seed=2)
        cfg = SearchConfig(half_width=11, d=23.0, orientation_known=Orientation.HORIZONTAL)
        res = mfme_search(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
        lattice_evals = [c for c, _ in res.trace if c.stage is Stage.MCP_LATTICE]
        assert [(c.x, c.y) for c in lattice_evals] == [(0, 0)]
        assert res.points_evaluated == 2 + 24  # seed + origin site + 5x5 square ring

    def test_wrong_orientation_degrades(self):
        # vertical-content sequence searched with a horizontal lattice
        dev = (0, 0)
        cur, ref, _ = make_pair(d=23.0, shift=(0, 1), dev=dev, seed=3,
                                orientation=Orientation.VERTICAL)
        cfg_right = SearchConfig(half_width=64, d=23.0,
                                 orientation_known=Orientation.VERTICAL)
        cfg_wrong = SearchConfig(half_width=64, d=23.0,
                                 orientation_known=Orientation.HORIZONTAL)
        fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg_right)
        right = mfme_search(cur, ref, CENTER_BLOCK, PMV0, cfg_right)
        wrong = mfme_search(cur, ref, CENTER_BLOCK, PMV0, cfg_wrong)
        assert right.best_cost == fs.best_cost
        assert wrong.best_cost > right.best_cost


class TestMtss:
    CFG = dict(half_width=64, d=23.0, orientation_known=Orientation.HORIZONTAL)

    def test_deviation_equal_to_matching_distance_hits(self):
        # the matching-pixel candidate at the best MCP lands exactly on the
        # optimum; d large vs the deviation keeps the true MCP the best one
        cur, ref, _ = make_pair(d=72.38, shift=(1, 0), dev=(8, 0), seed=1, size=640)
        cfg = SearchConfig(half_width=128, d=72.38, matching_distance=8,
                           orientation_known=Orientation.HORIZONTAL)
        block = BlockRect(312, 312, 16, 16)
        fs = full_search(cur, ref, block, PMV0, cfg)
        mt = mtss_like_search(cur, ref, block, PMV0, cfg)
        assert mt.best_cost == fs.best_cost

    def test_wrong_matching_distance_fails_on_deep_hole_deviation(self):
        # deviation (11, 10) sits between lattice basins; the fixed s = 24
        # candidates and the d-limited star refinement never reach the optimum
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), dev=(11, 10), seed=1)
        cfg = SearchConfig(matching_distance=24, **self.CFG)
        fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        mt = mtss_like_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        assert mt.best_cost > fs.best_cost

    def test_zero_matching_distance_reduces_to_mcp_plus_star(self):
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), seed=6)
        cfg = SearchConfig(matching_distance=0, **self.CFG)
        res = mtss_like_search(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
        stages = {c.stage for c, _ in res.trace}
        assert Stage.NEIGHBOR_DIAMOND not in stages
        assert stages <= {Stage.CENTER, Stage.MCP_LATTICE, Stage.REFINEMENT}

    def test_requires_matching_distance(self):
        cur, ref, _ = make_pair()
        with pytest.raises(ValueError):
            mtss_like_search(cur, ref, CENTER_BLOCK, PMV0, SearchConfig(**self.CFG))


class TestMcpns:
    def test_identity(self):
        cur, ref, _ = make_pair(shift=(0, 0))
        res = mcpns_search(cur, ref, CENTER_BLOCK, PMV0, SearchConfig(half_width=32, d=23.0))
        assert (res.best_mv.x, res.best_mv.y) == (0, 0)
        assert res.best_cost == 0
        assert res.stage_of_best is Stage.CENTER

    def test_ring1_shift_hits_via_fast_pass(self):
        cur, ref, truth = make_pair(d=23.0, shift=(1, 0), seed=5)
        cfg = SearchConfig(half_width=64, d=23.0)
        fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        mc = mcpns_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        assert mc.best_cost == fs.best_cost == 0
        assert (mc.best_mv.x, mc.best_mv.y) == (truth.x, truth.y)
        assert mc.stage_of_best is Stage.FAST_MCP_H

    def test_deviation_reached_by_neighbors_or_refinement(self):
        cur, ref, truth = make_pair(d=23.0, shift=(1, 0), dev=(3, 2), seed=7)
        cfg = SearchConfig(half_width=64, d=23.0)
        fs = full_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        mc = mcpns_search(cur, ref, CENTER_BLOCK, PMV0, cfg)
        assert mc.best_cost == fs.best_cost
        assert (mc.best_mv.x, mc.best_mv.y) == (truth.x, truth.y)
        assert mc.stage_of_best in (Stage.NEIGHBOR_DIAMOND, Stage.REFINEMENT)

    def test_budget_formula_with_early_termination_off(self):
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), seed=9, size=896)
        cfg = SearchConfig(half_width=384, d=23.0, early_termination=False)
        pmv = Candidate(3, 2)
        block = BlockRect(440, 440, 16, 16)
        res = mcpns_search(cur, ref, block, pmv, cfg, trace=True)
        fast = fast_mcp_agnostic(23.0, SearchWindow(384, pmv))
        expected = (
            2 + len(fast) + 16 * neighbor_count(23)
            + res.refine_passes * refinement_count(23)
        )
        assert res.points_evaluated == expected
        assert len(res.trace) == res.points_evaluated

    def test_early_termination_reduces_points_for_wide_loops(self):
        # d = 72.38 runs loops 1..32; anchors silent through the 16-distance
        # loop (which completes their 8-pixel window) skip the 32 loop
        cur, ref, _ = make_pair(d=72.38, shift=(1, 0), dev=(2, 1), seed=3, size=640)
        block = BlockRect(312, 312, 16, 16)
        on = mcpns_search(cur, ref, block, PMV0,
                          SearchConfig(half_width=128, d=72.38, early_termination=True))
        off = mcpns_search(cur, ref, block, PMV0,
                           SearchConfig(half_width=128, d=72.38, early_termination=False))
        assert on.points_evaluated < off.points_evaluated
        assert on.best_cost == off.best_cost

    def test_early_termination_noop_when_no_loop_beyond_window(self):
        # d = 23: loops end at distance 8, nothing is abortable
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), seed=5)
        on = mcpns_search(cur, ref, CENTER_BLOCK, PMV0,
                          SearchConfig(half_width=64, d=23.0, early_termination=True))
        off = mcpns_search(cur, ref, CENTER_BLOCK, PMV0,
                           SearchConfig(half_width=64, d=23.0, early_termination=False))
        assert on.points_evaluated == off.points_evaluated

    def test_neighbors_ablation_skips_stage(self):
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), seed=5)
        cfg = SearchConfig(half_width=64, d=23.0, enable_neighbors=False)
        res = mcpns_search(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
        stages = {c.stage for c, _ in res.trace}
        assert Stage.NEIGHBOR_DIAMOND not in stages

    def test_top_k_pool_includes_centers(self):
        # a sub-macropixel optimum at the pmv seed must survive into refinement
        cur, ref = shifted_frames((2, 0), seed=13, size=128)
        cfg = SearchConfig(half_width=32, d=23.0)
        res = mcpns_search(cur, ref, BlockRect(56, 56, 16, 16), PMV0, cfg)
        assert res.best_cost == 0
        assert (res.best_mv.x, res.best_mv.y) == (2, 0)


class TestSharedInvariants:
    CASES = [
        dict(d=23.0, shift=(1, 0), dev=(0, 0), seed=5),
        dict(d=23.0, shift=(0, 1), dev=(3, -2), seed=6),
        dict(d=16.0, shift=(-1, 1), dev=(1, 1), seed=7),
        dict(d=23.0, shift=(0, -1), dev=(0, 0), seed=1),
    ]

    def _run_all(self, cur, ref, block, cfg, trace=False):
        out = {}
        for name, fn in STRATEGIES.items():
            out[name] = fn(cur, ref, block, PMV0, cfg, trace=trace)
        return out

    @pytest.mark.parametrize("case", CASES)
    def test_oracle_dominance_and_center_bound(self, case):
        cur, ref, _ = make_pair(**case)
        cfg = SearchConfig(
            half_width=48, d=case["d"],
            orientation_known=Orientation.HORIZONTAL, matching_distance=12,
        )
        results = self._run_all(cur, ref, CENTER_BLOCK, cfg, trace=True)
        oracle = results["fs"].best_cost
        from plenome.cost import sad

        center_cost = sad(cur, ref, CENTER_BLOCK, PMV0)
        for name, res in results.items():
            assert res.best_cost >= oracle, name
            assert res.best_cost <= center_cost, name

    @pytest.mark.parametrize("case", CASES[:2])
    def test_monotone_improvement_and_window_bound(self, case):
        cur, ref, _ = make_pair(**case)
        cfg = SearchConfig(half_width=48, d=case["d"])
        res = mcpns_search(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
        best = None
        for cand, cost in res.trace:
            assert max(abs(cand.x), abs(cand.y)) <= 48
            best = cost if best is None else min(best, cost)
        assert best == res.best_cost

    def test_determinism_with_trace(self):
        cur, ref, _ = make_pair(d=23.0, shift=(1, 0), dev=(2, 2), seed=4)
        cfg = SearchConfig(
            half_width=48, d=23.0,
            orientation_known=Orientation.HORIZONTAL, matching_distance=10,
        )
        for name, fn in STRATEGIES.items():
            a = fn(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
            b = fn(cur, ref, CENTER_BLOCK, PMV0, cfg, trace=True)
            assert a == b, name

    def test_nonzero_pmv_window_anchoring(self):
        cur, ref, truth = make_pair(d=16.0, shift=(1, 0), seed=12, size=256)
        block = BlockRect(120, 120, 16, 16)
        cfg = SearchConfig(half_width=12, d=16.0)
        pmv = Candidate(14, 2)
        fs = full_search(cur, ref, block, pmv, cfg)
        mc = mcpns_search(cur, ref, block, pmv, cfg, trace=True)
        assert (fs.best_mv.x, fs.best_mv.y) == (truth.x, truth.y)
        for cand, _ in mc.trace:
            assert max(abs(cand.x - 14), abs(cand.y - 2)) <= 12
        assert mc.best_cost >= fs.best_cost

    def test_state_evaluate_matches_cost_module(self):
        from plenome.cost import sad

        cur, ref, _ = make_pair(d=16.0, shift=(1, 0), seed=2, size=256)
        cfg = SearchConfig(half_width=24, d=16.0)
        block = BlockRect(120, 120, 16, 16)
        state = SearchState(cur, ref, block, PMV0, cfg)
        rng = np.random.default_rng(0)
        for _ in range(30):
            x = int(rng.integers(-24, 25))
            y = int(rng.integers(-24, 25))
            got = state.evaluate(x, y, Stage.RASTER)
            assert got == sad(cur, ref, block, Candidate(x, y))
