"""Lattice geometry walkthrough: matching distance, MCP candidates, fast rings.

Run from the repo root:  python3 demos/01_lattice_and_patterns.py
Writes figures to demos/out/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from plenome import (
    MlaGeometry,
    OpticsMode,
    OpticsParams,
    Orientation,
    RingShape,
    SearchWindow,
    derive_matching_distance,
    fast_mcp_agnostic,
    fast_mcp_count,
    mcp_lattice,
    mcp_lattice_count,
    neighbor_count,
    total_budget,
)
from plenome.io import PRESETS

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# --- the matching pixel distance follows from the relay optics ------------
# A Keplerian camera (main-lens image in front of the MLA) with a = 3 b
# spreads one object point across neighboring lenses at s = (a-b)/a * d.
optics = OpticsParams(a=3.0, b=1.0, mode=OpticsMode.KEPLERIAN, d=23.30)
print(f"Keplerian a=3b, d=23.30  ->  s = {derive_matching_distance(optics):.2f} px")

# --- every bundled sequence preset gets a candidate budget ----------------
print("\npreset            d      full-lattice  fast(1 orient)  neighbors  total")
for name, preset in sorted(PRESETS.items()):
    d = preset["d"]
    geom = MlaGeometry(d, Orientation.HORIZONTAL)
    print(
        f"{name:26s} {d:6.2f} {mcp_lattice_count(geom, 128):9d} "
        f"{fast_mcp_count(d, 128):12d} {neighbor_count(d):10d} "
        f"{total_budget(d, 128, 16):8d}"
    )

# --- the full MCP lattice vs the center-biased fast pattern ---------------
d = 23.0
window = SearchWindow(128)
geom = MlaGeometry(d, Orientation.HORIZONTAL)
lattice = mcp_lattice(geom, window)
fast = fast_mcp_agnostic(d, window, RingShape.RHOMBUS)
print(f"\nd={d}, W=128: {len(lattice)} lattice candidates, "
      f"{len(fast)} in the orientation-agnostic fast pattern")

fig, axes = plt.subplots(1, 2, figsize=(11, 5.5), sharex=True, sharey=True)
axes[0].scatter([c.x for c in lattice], [c.y for c in lattice], s=8, c="tab:gray")
axes[0].set_title(f"all MCP candidates ({len(lattice)})")
colors = {"fast_mcp_h": "tab:blue", "fast_mcp_v": "tab:red"}
for key, color in colors.items():
    xs = [c.x for c in fast if c.stage.value == key]
    ys = [c.y for c in fast if c.stage.value == key]
    axes[1].scatter(xs, ys, s=14, c=color, label=key)
axes[1].legend()
axes[1].set_title(f"fast rhombus rings, both orientations ({len(fast)})")
for ax in axes:
    ax.set_aspect("equal")
    ax.axhline(0, lw=0.3, c="k")
    ax.axvline(0, lw=0.3, c="k")
fig.suptitle(f"MCP search candidates, d = {d}, window = 128")
fig.savefig(out / "01_patterns.png", dpi=120, bbox_inches="tight")
print(f"wrote {out / '01_patterns.png'}")
