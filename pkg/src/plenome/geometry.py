"""Microlens-array optics and lattice math.

Everything a motion search needs to know about hexagonal MLA geometry:
the matching pixel distance, macropixel-collocated-position (MCP) lattice
coordinates and closed-form counts, the 8-points-per-ring fast MCP
patterns (rhombus / hexagon, plus the orientation-agnostic doubling),
diamond rings, and the per-stage candidate budgets.

All functions are pure; window-relative candidate sets are memoized, so
repeated per-block calls with different window centers are cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import InvalidDiameterError, InvalidOpticsError

SQRT3 = math.sqrt(3.0)


class OpticsMode(Enum):
    KEPLERIAN = "keplerian"
    GALILEAN = "galilean"


class Orientation(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class RingShape(Enum):
    RHOMBUS = "rhombus"
    HEXAGON = "hexagon"


class Stage(Enum):
    """Which search stage produced a candidate."""

    CENTER = "center"
    MCP_LATTICE = "mcp_lattice"
    FAST_MCP_H = "fast_mcp_h"
    FAST_MCP_V = "fast_mcp_v"
    NEIGHBOR_DIAMOND = "neighbor_diamond"
    REFINEMENT = "refinement"
    RASTER = "raster"


def round_px(v: float) -> int:
    """Round to the nearest integer pixel, halves away from zero (11.5 -> 12, -11.5 -> -12)."""
    if v >= 0.0:
        return int(math.floor(v + 0.5))
    return -int(math.floor(-v + 0.5))


@dataclass(frozen=True)
class OpticsParams:
    """Focused-plenoptic optical distances.

    a: MLA to main-lens image plane, b: MLA to sensor (same unit), d:
    microlens diameter in pixels.  focal_length is optional and only
    checked for consistency with the lens equation 1/a + 1/b = 1/f.
    """

    a: float
    b: float
    mode: OpticsMode
    d: float
    focal_length: float | None = None

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise InvalidOpticsError(f"distances must be positive: a={self.a}, b={self.b}")
        if self.d <= 0:
            raise InvalidOpticsError(f"microlens diameter must be positive: d={self.d}")
        if self.mode is OpticsMode.KEPLERIAN and self.a < self.b:
            raise InvalidOpticsError(
                f"Keplerian mode needs a >= b, got a={self.a} < b={self.b}"
            )
        if self.focal_length is not None:
            lhs = 1.0 / self.a + 1.0 / self.b
            if not math.isclose(lhs, 1.0 / self.focal_length, rel_tol=1e-6):
                raise InvalidOpticsError(
                    f"lens equation violated: 1/a + 1/b = {lhs:.6g} "
                    f"but 1/f = {1.0 / self.focal_length:.6g}"
                )


def derive_matching_distance(optics: OpticsParams) -> float:
    """Distance s between sensor responses of one object point under adjacent lenses.

    Keplerian: s = (a - b)/a * d.  Galilean: s = (a + b)/a * d.
    """
    if optics.mode is OpticsMode.KEPLERIAN:
        return (optics.a - optics.b) / optics.a * optics.d
    return (optics.a + optics.b) / optics.a * optics.d


@dataclass(frozen=True)
class MlaGeometry:
    """Hexagonal microlens lattice constants.

    `pitch` (= d) is the spacing between adjacent lenses along a lattice
    row and `row_step` (= sqrt(3)/2 * d) the spacing between rows, so
    row_step < pitch always.  `orientation` says which frame axis the
    dense rows run along: HORIZONTAL rows run along x (Raytrix R8
    layout), VERTICAL along y (Raytrix R5 / Single Focused layout).
    `odd_row_offset_sign` picks the +pitch/2 (default) or -pitch/2
    stagger of odd rows; the two choices produce mirror lattices.
    """

    d: float
    orientation: Orientation = Orientation.HORIZONTAL
    odd_row_offset_sign: int = 1

    def __post_init__(self):
        if self.d < 2:
            raise InvalidDiameterError(f"microlens diameter must be >= 2 px, got {self.d}")
        if self.odd_row_offset_sign not in (1, -1):
            raise InvalidOpticsError("odd_row_offset_sign must be +1 or -1")

    @property
    def pitch(self) -> float:
        """In-row lens spacing (w in the horizontal layout)."""
        return float(self.d)

    @property
    def row_step(self) -> float:
        """Row-to-row spacing (h in the horizontal layout)."""
        return SQRT3 * self.d / 2.0

    def transposed(self) -> "MlaGeometry":
        other = (
            Orientation.VERTICAL
            if self.orientation is Orientation.HORIZONTAL
            else Orientation.HORIZONTAL
        )
        return MlaGeometry(self.d, other, self.odd_row_offset_sign)

    def lattice_point(self, p: int, q: int) -> tuple[float, float]:
        """Real-valued window coordinates of lattice site (p, q).

        q indexes rows, p indexes positions along a row; odd rows are
        staggered by half a pitch.  VERTICAL orientation transposes the
        two frame axes.
        """
        along = p * self.pitch
        if q % 2 != 0:
            along += self.odd_row_offset_sign * self.pitch / 2.0
        across = q * self.row_step
        if self.orientation is Orientation.HORIZONTAL:
            return along, across
        return across, along


@dataclass(frozen=True)
class Candidate:
    """Integer-pixel motion-vector candidate."""

    x: int
    y: int
    stage: Stage = Stage.CENTER

    def offset(self) -> tuple[int, int]:
        return self.x, self.y


@dataclass(frozen=True)
class SearchWindow:
    """Square window of feasible MVs: Chebyshev radius `half_width` around `center`."""

    half_width: int
    center: Candidate = field(default_factory=lambda: Candidate(0, 0))

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError(f"window half-width must be >= 1, got {self.half_width}")

    def contains(self, x: int, y: int) -> bool:
        return (
            abs(x - self.center.x) <= self.half_width
            and abs(y - self.center.y) <= self.half_width
        )


def enumerate_lattice_sites(geom: MlaGeometry, half_width: int) -> list[tuple[int, int]]:
    """All lattice (p, q) index pairs whose real coordinates fall in [-W, W]^2.

    This is the pre-rounding, pre-dedup enumeration whose length the
    closed-form count must match exactly.
    """
    w = geom.pitch
    h = geom.row_step
    m = int(math.floor(half_width / h))
    sites: list[tuple[int, int]] = []
    for q in range(-m, m + 1):
        if q % 2 == 0:
            n = int(math.floor(half_width / w))
            ps = range(-n, n + 1)
        else:
            # staggered rows: |p*w + sign*w/2| <= W
            if geom.odd_row_offset_sign > 0:
                lo = math.ceil((-half_width - w / 2.0) / w)
                hi = math.floor((half_width - w / 2.0) / w)
            else:
                lo = math.ceil((-half_width + w / 2.0) / w)
                hi = math.floor((half_width + w / 2.0) / w)
            ps = range(int(lo), int(hi) + 1)
        for p in ps:
            sites.append((p, q))
    return sites


def mcp_lattice_count(geom: MlaGeometry, half_width: int) -> int:
    """Closed-form count of MCP candidates inside the window (no enumeration).

    Row-count formula with m = floor(W / row_step); even rows hold
    2*floor(W/pitch) + 1 sites, staggered rows 2*floor((W + pitch/2)/pitch).
    """
    if half_width < 1:
        raise ValueError("half_width must be >= 1")
    w = geom.pitch
    h = geom.row_step
    m = int(math.floor(half_width / h))
    even_row_sites = 2 * int(math.floor(half_width / w)) + 1
    odd_row_sites = 2 * int(math.floor((half_width + w / 2.0) / w))
    if m % 2 == 0:
        return (m + 1) * even_row_sites + m * odd_row_sites
    return m * even_row_sites + (m + 1) * odd_row_sites


@lru_cache(maxsize=256)
def _mcp_lattice_rel(geom: MlaGeometry, half_width: int) -> tuple[tuple[int, int], ...]:
    """Window-relative, rounded, deduped, distance-ordered MCP offsets (cached)."""
    rel = []
    for p, q in enumerate_lattice_sites(geom, half_width):
        rx, ry = geom.lattice_point(p, q)
        rel.append((round_px(rx), round_px(ry)))
    rel.sort(key=lambda xy: (max(abs(xy[0]), abs(xy[1])), xy[1], xy[0]))
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    for xy in rel:
        if xy in seen:
            continue
        seen.add(xy)
        out.append(xy)
    return tuple(out)


def mcp_lattice(geom: MlaGeometry, window: SearchWindow) -> list[Candidate]:
    """MCP candidates inside the window, anchored at the window center.

    Real lattice coordinates are rounded per coordinate (halves away from
    zero), duplicates after rounding dropped, and the result ordered by
    ascending Chebyshev distance from the center with raster (y, then x)
    tie-breaking.  The origin site is always present.
    """
    cx, cy = window.center.x, window.center.y
    return [
        Candidate(cx + x, cy + y, Stage.MCP_LATTICE)
        for x, y in _mcp_lattice_rel(geom, window.half_width)
    ]


def _ring_targets(ring: int, d: float, shape: RingShape) -> list[tuple[float, float]]:
    """Ideal (pre-snap) positions of one fast-MCP ring for the horizontal
    layout, CCW from the +x axis.

    The axial +/-x steps and the four diagonal steps land exactly on
    lattice sites; the two +/-y targets generally need snapping.  The
    rhombus places them at `ring` row steps; the hexagon puts them on the
    ring circumradius ring*d, keeping all eight points equidistant from
    the center, which gives that pattern its hexagonal outline.
    """
    w = d
    h = SQRT3 * d / 2.0
    ay = ring * h if shape is RingShape.RHOMBUS else ring * d
    return [
        (ring * w, 0.0),
        (ring * w / 2.0, ring * h),
        (0.0, ay),
        (-ring * w / 2.0, ring * h),
        (-ring * w, 0.0),
        (-ring * w / 2.0, -ring * h),
        (0.0, -ay),
        (ring * w / 2.0, -ring * h),
    ]


@lru_cache(maxsize=256)
def _fast_ring_groups_rel(
    geom: MlaGeometry, half_width: int, shape: RingShape
) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Per-ring window-relative fast-MCP offsets, snapped and deduped (cached)."""
    rings = int(math.floor(half_width / geom.d))
    if rings < 1:
        return ()
    lattice = _mcp_lattice_rel(geom, half_width)
    lat = np.asarray(lattice, dtype=np.float64)
    seen: set[tuple[int, int]] = set()
    groups: list[tuple[tuple[int, int], ...]] = []
    for ring in range(1, rings + 1):
        targets = _ring_targets(ring, geom.d, shape)
        if geom.orientation is Orientation.VERTICAL:
            targets = [(ty, tx) for tx, ty in targets]
        group: list[tuple[int, int]] = []
        for tx, ty in targets:
            dist = (lat[:, 0] - tx) ** 2 + (lat[:, 1] - ty) ** 2
            snapped = lattice[int(np.argmin(dist))]
            if snapped in seen:
                continue
            seen.add(snapped)
            group.append(snapped)
        groups.append(tuple(group))
    return tuple(groups)


def fast_mcp_rings(
    geom: MlaGeometry, window: SearchWindow, shape: RingShape = RingShape.RHOMBUS
) -> list[Candidate]:
    """Center-biased fast MCP pattern: floor(W/d) rings of 8 lattice candidates.

    Rings are emitted from the center outward; within a ring the order is
    counter-clockwise starting on the +x axis.  Every target is snapped
    to the nearest in-window MCP candidate (ties resolved by the lattice
    ordering), so containment in mcp_lattice holds by construction.
    Duplicates after snapping are dropped keeping the first occurrence.
    """
    cx, cy = window.center.x, window.center.y
    stage = (
        Stage.FAST_MCP_H if geom.orientation is Orientation.HORIZONTAL else Stage.FAST_MCP_V
    )
    out: list[Candidate] = []
    for group in _fast_ring_groups_rel(geom, window.half_width, shape):
        out.extend(Candidate(cx + x, cy + y, stage) for x, y in group)
    return out


def fast_mcp_agnostic(
    d: float,
    window: SearchWindow,
    shape: RingShape = RingShape.RHOMBUS,
    odd_row_offset_sign: int = 1,
) -> list[Candidate]:
    """Orientation-agnostic fast MCP pattern: both layouts, interleaved ring by ring
    (H ring 1, V ring 1, H ring 2, ...) so center-bias ordering is preserved.

    Candidates keep the stage of the lattice they came from; points shared
    by both lattices keep their first occurrence.
    """
    geom_h = MlaGeometry(d, Orientation.HORIZONTAL, odd_row_offset_sign)
    geom_v = MlaGeometry(d, Orientation.VERTICAL, odd_row_offset_sign)
    h_groups = _fast_ring_groups_rel(geom_h, window.half_width, shape)
    v_groups = _fast_ring_groups_rel(geom_v, window.half_width, shape)
    cx, cy = window.center.x, window.center.y
    seen: set[tuple[int, int]] = set()
    out: list[Candidate] = []
    for i in range(max(len(h_groups), len(v_groups))):
        for groups, stage in ((h_groups, Stage.FAST_MCP_H), (v_groups, Stage.FAST_MCP_V)):
            if i >= len(groups):
                continue
            for xy in groups[i]:
                if xy in seen:
                    continue
                seen.add(xy)
                out.append(Candidate(cx + xy[0], cy + xy[1], stage))
    return out


def diamond_ring(
    center: Candidate,
    distance: int,
    first_loop: bool,
    stage: Stage = Stage.NEIGHBOR_DIAMOND,
) -> list[Candidate]:
    """Small (4-point) or large (8-point) diamond around `center`.

    The large diamond adds the four half-distance corners of TZS-style
    search; points are ordered CCW from the +x axis.
    """
    if distance < 1:
        raise ValueError(f"diamond distance must be >= 1, got {distance}")
    d = distance
    if first_loop:
        offs = [(d, 0), (0, d), (-d, 0), (0, -d)]
    else:
        r = round_px(d / 2.0)
        offs = [(d, 0), (r, r), (0, d), (-r, r), (-d, 0), (-r, -r), (0, -d), (r, -r)]
    return [Candidate(center.x + ox, center.y + oy, stage) for ox, oy in offs]


def loop_count(d: float) -> int:
    """Number of diamond loops N = floor(log2 d); requires d >= 2."""
    if d < 2:
        raise InvalidDiameterError(f"diameter must be >= 2 for neighbor search, got {d}")
    return int(math.floor(math.log2(d)))


def diamond_distances(d: float) -> list[int]:
    """Expanding diamond distances 1, 2, 4, ..., 2^(N-1) with N = floor(log2 d)."""
    return [2**i for i in range(loop_count(d))]


def neighbor_count(d: float) -> int:
    """Candidates per neighbors-MCP search: 4 for the first loop + 8 per extra loop."""
    return 4 + 8 * (loop_count(d) - 1)


def refinement_count(d: float) -> int:
    """Candidates per star-refinement pass (same loop schedule as the neighbor search)."""
    return neighbor_count(d)


def fast_mcp_count(d: float, half_width: int) -> int:
    """Fast MCP candidates for one orientation: 8 * floor(W/d), before snapping dedup."""
    return 8 * int(math.floor(half_width / d))


def total_budget(d: float, half_width: int, top_k: int) -> int:
    """Best-case candidate total: both-orientation fast pass + top-K neighbor
    searches + one refinement pass."""
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    return 2 * fast_mcp_count(d, half_width) + top_k * neighbor_count(d) + refinement_count(d)
