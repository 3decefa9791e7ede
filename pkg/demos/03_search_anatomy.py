"""Anatomy of one MCP-and-neighbors search next to the baselines.

Run from the repo root:  python3 demos/03_search_anatomy.py
"""

from collections import Counter

from plenome import (
    BlockRect,
    Candidate,
    MotionSpec,
    Orientation,
    STRATEGIES,
    SearchConfig,
    SynthSpec,
    render_pair,
)

# A macropixel-scale shift with a 5-pixel deviation: exactly the motion
# that defeats pixel-level center-biased search.
spec = SynthSpec(
    width=640, height=640, d=35.0, orientation=Orientation.HORIZONTAL,
    texture_seed=11, motion=MotionSpec(lattice_shift=(0, -1), deviation=(5, 0)),
)
cur, ref, truth = render_pair(spec)
print(f"truth MV: ({truth.x}, {truth.y})\n")

block = BlockRect(312, 312, 16, 16)
cfg = SearchConfig(
    half_width=64, d=35.0,
    orientation_known=Orientation.HORIZONTAL, matching_distance=18,
)

print(f"{'strategy':8s} {'best MV':>12s} {'cost':>8s} {'points':>7s}  found by")
oracle_cost = None
for name in ("fs", "tzs", "mfme", "mtss", "mcpns"):
    res = STRATEGIES[name](cur, ref, block, Candidate(0, 0), cfg)
    if name == "fs":
        oracle_cost = res.best_cost
    hit = "(oracle)" if name == "fs" else ("hit" if res.best_cost == oracle_cost else "MISS")
    print(f"{name:8s} ({res.best_mv.x:4d},{res.best_mv.y:4d}) {res.best_cost:8d} "
          f"{res.points_evaluated:7d}  {res.stage_of_best.value:18s} {hit}")

# Where does the fast search spend its evaluations?
res = STRATEGIES["mcpns"](cur, ref, block, Candidate(0, 0), cfg, trace=True)
stages = Counter(c.stage.value for c, _ in res.trace)
print("\nmcpns evaluation breakdown:")
for stage, count in stages.most_common():
    print(f"  {stage:18s} {count:4d}")
print(f"  total {res.points_evaluated} points, {res.refine_passes} refinement pass(es)")

# The best-so-far trajectory is monotone by construction.
best = None
drops = []
for cand, cost in res.trace:
    if best is None or cost < best:
        best = cost
        drops.append((cand.stage.value, (cand.x, cand.y), cost))
print("\nnew-best chain (stage, mv, cost):")
for stage, mv, cost in drops:
    print(f"  {stage:18s} {str(mv):>12s} {cost}")
