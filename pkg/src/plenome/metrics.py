"""Search-accuracy and complexity metrics: average search points, average
prediction error vs the full-search oracle, MCP hit rates, deviation
percentiles, and geometric-mean wall-clock ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Candidate, MlaGeometry, SearchWindow, mcp_lattice

BUCKET_THRESHOLDS = (1, 2, 4, 8)


@dataclass(frozen=True)
class StrategyOutcome:
    """Per-block result of one strategy: MV, cost, evaluated points, wall time."""

    mv: tuple[int, int]
    cost: int
    points: int
    micros: float = 0.0


@dataclass
class EvalRecord:
    """One block's outcomes across strategies, with the full-search oracle."""

    block_id: int
    oracle: StrategyOutcome
    outcomes: dict[str, StrategyOutcome] = field(default_factory=dict)

    def __post_init__(self):
        for name, out in self.outcomes.items():
            if out.cost < self.oracle.cost:
                raise ValueError(
                    f"block {self.block_id}: {name} cost {out.cost} below oracle "
                    f"cost {self.oracle.cost}; oracle must be the global optimum"
                )


def _outcomes(records: list[EvalRecord], strategy: str) -> list[StrategyOutcome]:
    try:
        return [r.outcomes[strategy] for r in records]
    except KeyError:
        raise KeyError(f"strategy {strategy!r} missing from records") from None


def asp(records: list[EvalRecord], strategy: str) -> float:
    """Average number of search points per motion estimation."""
    outs = _outcomes(records, strategy)
    return sum(o.points for o in outs) / len(outs)


def ape(records: list[EvalRecord], strategy: str) -> float:
    """Average L1 prediction error of the strategy MV against the oracle MV."""
    outs = _outcomes(records, strategy)
    total = 0
    for rec, out in zip(records, outs):
        total += abs(out.mv[0] - rec.oracle.mv[0]) + abs(out.mv[1] - rec.oracle.mv[1])
    return total / len(outs)


def hit_rate(records: list[EvalRecord], strategy: str) -> float:
    """Fraction of blocks where the strategy matched the oracle cost exactly."""
    outs = _outcomes(records, strategy)
    hits = sum(1 for rec, out in zip(records, outs) if out.cost == rec.oracle.cost)
    return hits / len(outs)


def cost_excess_mean(records: list[EvalRecord], strategy: str) -> float:
    """Mean cost above the oracle; 0 exactly when every block is a hit."""
    outs = _outcomes(records, strategy)
    return sum(out.cost - rec.oracle.cost for rec, out in zip(records, outs)) / len(outs)


def wall_ratio(records: list[EvalRecord], strategy: str, anchor: str) -> float:
    """Geometric-mean wall-time ratio vs an anchor strategy, in percent.

    Per-block search times stand in for encoding times here; sub-microsecond
    readings are clamped to one microsecond before taking logs.
    """
    a = _outcomes(records, strategy)
    b = _outcomes(records, anchor)
    la = np.log([max(o.micros, 1.0) for o in a])
    lb = np.log([max(o.micros, 1.0) for o in b])
    return float(math.exp(la.mean() - lb.mean()) * 100.0)


def _lattice_points(geom: MlaGeometry, radius: int) -> np.ndarray:
    window = SearchWindow(max(radius, 1), Candidate(0, 0))
    pts = mcp_lattice(geom, window)
    return np.array([[c.x, c.y] for c in pts], dtype=np.int64)


def nearest_lattice_distances(
    mvs: list[tuple[int, int]], geom: MlaGeometry, norm: str = "chebyshev"
) -> np.ndarray:
    """Per-MV distance to the nearest rounded MCP lattice point.

    The lattice is anchored at (0, 0); distances use the Chebyshev norm by
    default (L1 via norm="l1").
    """
    if not mvs:
        return np.zeros(0)
    arr = np.asarray(mvs, dtype=np.int64).reshape(-1, 2)
    radius = int(np.abs(arr).max()) + int(math.ceil(geom.d)) + 1
    lattice = _lattice_points(geom, radius)
    diff = np.abs(arr[:, None, :] - lattice[None, :, :])
    if norm == "chebyshev":
        dist = diff.max(axis=2)
    elif norm == "l1":
        dist = diff.sum(axis=2)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return dist.min(axis=1)


def hit_rate_at_mcp(mvs: list[tuple[int, int]], geom: MlaGeometry) -> float:
    """Fraction of MVs that sit exactly on a rounded MCP lattice point."""
    if not mvs:
        return 0.0
    dist = nearest_lattice_distances(mvs, geom)
    return float((dist == 0).mean())


def deviation_buckets(
    mvs: list[tuple[int, int]],
    geom: MlaGeometry,
    thresholds: tuple[int, ...] = BUCKET_THRESHOLDS,
    norm: str = "chebyshev",
) -> dict[str, float]:
    """Cumulative fraction of MVs within each deviation threshold of the lattice."""
    if not mvs:
        return {f"p_le_{t}": 0.0 for t in thresholds}
    dist = nearest_lattice_distances(mvs, geom, norm)
    return {f"p_le_{t}": float((dist <= t).mean()) for t in thresholds}


@dataclass
class StrategyReport:
    strategy: str
    blocks: int
    asp: float
    ape: float
    hit_rate: float
    cost_excess_mean: float
    wall_ratio_vs_fs: float | None
    wall_ratio_vs_tzs: float | None
    buckets: dict[str, float]

    def row(self) -> dict:
        out = {
            "strategy": self.strategy,
            "blocks": self.blocks,
            "asp": self.asp,
            "ape": self.ape,
            "hit_rate": self.hit_rate,
            "cost_excess_mean": self.cost_excess_mean,
            "wall_ratio_vs_fs": self.wall_ratio_vs_fs,
            "wall_ratio_vs_tzs": self.wall_ratio_vs_tzs,
        }
        out.update(self.buckets)
        return out


# fixed column order of the flat CSV report (documented in the README)
REPORT_COLUMNS = [
    "strategy",
    "blocks",
    "asp",
    "ape",
    "hit_rate",
    "cost_excess_mean",
    "wall_ratio_vs_fs",
    "wall_ratio_vs_tzs",
    "p_le_1",
    "p_le_2",
    "p_le_4",
    "p_le_8",
]


def build_report(
    records: list[EvalRecord], strategies: list[str], geom: MlaGeometry
) -> list[StrategyReport]:
    """Aggregate per-strategy metrics; records may arrive in any order.

    Merging is keyed by block id, so parallel producers aggregate to the
    same report regardless of completion order.
    """
    recs = sorted(records, key=lambda r: r.block_id)
    out = []
    for name in strategies:
        mvs = [r.outcomes[name].mv for r in recs]
        out.append(
            StrategyReport(
                strategy=name,
                blocks=len(recs),
                asp=asp(recs, name),
                ape=ape(recs, name),
                hit_rate=hit_rate(recs, name),
                cost_excess_mean=cost_excess_mean(recs, name),
                wall_ratio_vs_fs=wall_ratio(recs, name, "fs") if "fs" in recs[0].outcomes else None,
                wall_ratio_vs_tzs=(
                    wall_ratio(recs, name, "tzs") if "tzs" in recs[0].outcomes else None
                ),
                buckets=deviation_buckets(mvs, geom),
            )
        )
    return out
