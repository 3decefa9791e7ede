"""Desk-scale benchmark: all strategies against the full-search oracle.

Run from the repo root:  python3 demos/04_benchmark.py
Equivalent to the CLI:   plenome compare --config <cfg> --out report.csv
"""

import numpy as np

from plenome import EvalRecord, MlaGeometry, MotionSpec, Orientation, SearchConfig, StrategyOutcome, SynthSpec, render_pair
from plenome.cli import interior_blocks, run_blocks, tile_blocks
from plenome.metrics import build_report

D = 35.0
WINDOW = 64
STRATS = ["fs", "tzs", "mfme", "mtss", "mcpns"]

cfg = SearchConfig(
    half_width=WINDOW, d=D,
    orientation_known=Orientation.HORIZONTAL, matching_distance=18,
)

# Six pairs cycling through lattice shifts with small deviations, a dozen
# interior blocks each: small enough to run in under a minute, large
# enough for the orderings to be stable.
records = []
block_id = 0
rng = np.random.default_rng(5)
for i, shift in enumerate([(1, 0), (0, 1), (-1, 1), (0, -1), (1, 0), (-1, 0)]):
    dev = (int(rng.integers(-6, 7)), int(rng.integers(-6, 7)))
    spec = SynthSpec(width=512, height=512, d=D, texture_seed=100 + i,
                     motion=MotionSpec(shift, dev), vignette=False)
    cur, ref, _ = render_pair(spec)
    blocks = interior_blocks(tile_blocks(512, 512, 16, 16), cur, WINDOW, (0, 0))
    blocks = blocks[:: max(1, len(blocks) // 12)][:12]
    for row in run_blocks(cur, ref, blocks, STRATS, (0, 0), cfg):
        records.append(EvalRecord(
            block_id=block_id,
            oracle=StrategyOutcome(**{k: row["fs"][k] for k in ("mv", "cost", "points", "micros")}),
            outcomes={
                name: StrategyOutcome(**{k: row[name][k] for k in ("mv", "cost", "points", "micros")})
                for name in STRATS
            },
        ))
        block_id += 1

geom = MlaGeometry(D, Orientation.HORIZONTAL)
reports = build_report(records, STRATS, geom)
print(f"{len(records)} blocks, W = {WINDOW}, d = {D}\n")
print(f"{'strategy':8s} {'ASP':>9s} {'APE':>7s} {'hit':>6s} {'excess':>8s} {'time vs FS':>11s}")
for rep in reports:
    print(
        f"{rep.strategy:8s} {rep.asp:9.1f} {rep.ape:7.2f} {rep.hit_rate:6.2f} "
        f"{rep.cost_excess_mean:8.1f} {rep.wall_ratio_vs_fs:10.1f}%"
    )
print("\noracle-MV deviation buckets (fs row):")
fs_rep = next(r for r in reports if r.strategy == "fs")
print("  " + "  ".join(f"{k}={v:.2f}" for k, v in fs_rep.buckets.items()))
