"""Synthetic plenoptic-2.0 frame pairs with exact ground-truth motion.

The generator realizes the ray-flow motion model: scene translation moves
every ray by the same pixel offset, so the current frame is an exact
whole-frame translation of the reference.  Both frames are cropped from
one enlarged canvas, which keeps the macropixel structure valid right up
to the frame edges and makes the ground-truth MV exact everywhere.

Micro-images are relay-magnified crops of a layered procedural scene
(flat cells with sparse edges under a band-limited cosine field), so
adjacent lenses share overlapping content shifted by the matching pixel
distance while still differing per lens, with circular masks and dark
inter-lens gaps on a hexagonal lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cost import Frame
from .errors import ShiftExitsFrameError, SpecTooSmallError
from .geometry import Candidate, MlaGeometry, Orientation, round_px

GAP_LUMA = 12  # sample value of the dark inter-lens gaps


@dataclass(frozen=True)
class MotionSpec:
    """Whole-frame motion: integer microlens steps plus a pixel deviation."""

    lattice_shift: tuple[int, int] = (0, 0)
    deviation: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class SynthSpec:
    width: int = 512
    height: int = 512
    d: float = 23.0
    orientation: Orientation = Orientation.HORIZONTAL
    texture_seed: int = 0
    vignette: bool = True
    motion: MotionSpec = field(default_factory=MotionSpec)
    noise_sigma: float = 0.0
    texture_contrast: float = 1.0  # 0 -> constant scene (flat discs)
    relay_scale: float = 1.05  # micro-image magnification; >1 overlaps neighbors
    fill_ratio: float = 0.97  # disc diameter as a fraction of the pitch
    lens_variation: float = 34.0  # per-lens luma offset range (depth/parallax stand-in)
    odd_row_offset_sign: int = 1

    def __post_init__(self):
        if self.width < 4 * self.d or self.height < 4 * self.d:
            raise SpecTooSmallError(
                f"frame {self.width}x{self.height} must be at least 4*d = {4 * self.d:.0f} "
                "pixels on each side"
            )
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.relay_scale <= 1.0:
            raise ValueError("relay_scale must exceed 1 for plenoptic-2.0 overlap")

    @property
    def geometry(self) -> MlaGeometry:
        return MlaGeometry(self.d, self.orientation, self.odd_row_offset_sign)


def lattice_shift_pixels(spec: SynthSpec) -> tuple[int, int]:
    """Map the (p, q) microlens shift to integer pixels, rounded like the MCP lattice."""
    p, q = spec.motion.lattice_shift
    rx, ry = spec.geometry.lattice_point(p, q)
    return round_px(rx), round_px(ry)


def truth_motion(spec: SynthSpec) -> Candidate:
    """Ground-truth MV: lattice shift in pixels plus the configured deviation.

    Sign convention matches the cost module: the MV is added to
    current-block coordinates to index the reference frame.
    """
    lx, ly = lattice_shift_pixels(spec)
    dx, dy = spec.motion.deviation
    return Candidate(lx + dx, ly + dy)


def _hash_u64(ix: np.ndarray, iy: np.ndarray, seed: int, salt: int) -> np.ndarray:
    """Deterministic 64-bit mix of integer grid coordinates."""
    u = ix.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    u ^= iy.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
    u ^= np.uint64(((seed * 2654435761) ^ (salt * 0x94D049BB)) & 0xFFFFFFFFFFFFFFFF)
    u ^= u >> np.uint64(33)
    u *= np.uint64(0xFF51AFD7ED558CCD)
    u ^= u >> np.uint64(33)
    return u


class _SceneTexture:
    """Layered random scene: flat Voronoi cells plus a band-limited cosine field.

    The two layers play different roles in the matching-cost ladder.  The
    cosine band is log-uniform in [1.5d, 2.5d]; no wavelength is close to
    the lens pitch, so a one-pitch shift cannot alias onto itself and
    sideways lattice matches decorrelate fully, while a few pixels of
    misalignment cost only a small fraction of that.  The jittered-grid
    Voronoi cells (size ~1.3d) add sparse edge geometry, which makes a
    16x16 block discriminative against far-away impostor patches without
    taxing small misalignments away from the sparse boundaries.  The
    field evaluates exactly at arbitrary real coordinates (needed for
    relay-magnified sampling).
    """

    N_WAVES = 24

    def __init__(self, seed: int, d: float, contrast: float):
        self.seed = seed
        self.cell = 1.3 * d
        self.level_amp = 24.0 * contrast
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x5CE7E])
        wavelengths = np.exp(rng.uniform(math.log(1.5 * d), math.log(2.5 * d), self.N_WAVES))
        angles = rng.uniform(0.0, 2.0 * math.pi, self.N_WAVES)
        self.kx = 2.0 * math.pi * np.cos(angles) / wavelengths
        self.ky = 2.0 * math.pi * np.sin(angles) / wavelengths
        self.phase = rng.uniform(0.0, 2.0 * math.pi, self.N_WAVES)
        self.amp = rng.uniform(0.6, 1.0, self.N_WAVES)
        # the cosine layer carries ~62 luma units of std at contrast 1
        sigma = math.sqrt(float((self.amp**2).sum()) / 2.0)
        self.amp *= contrast * 62.0 / sigma if sigma > 0 else 0.0

    def _cell_levels(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Luma level of the nearest jittered cell site (Voronoi F1)."""
        g = self.cell
        cx = np.floor(xs / g).astype(np.int64)
        cy = np.floor(ys / g).astype(np.int64)
        best_d2 = None
        best_level = None
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ix = cx + dx
                iy = cy + dy
                h = _hash_u64(ix, iy, self.seed, 0xCE11)
                # split hash bits: site jitter in [0.1, 0.9), level in [-1, 1)
                jx = 0.1 + 0.8 * ((h >> np.uint64(0)) & np.uint64(0x1FFFFF)).astype(np.float64) / float(1 << 21)
                jy = 0.1 + 0.8 * ((h >> np.uint64(21)) & np.uint64(0x1FFFFF)).astype(np.float64) / float(1 << 21)
                lvl = (((h >> np.uint64(42)) & np.uint64(0x3FFFFF)).astype(np.float64) / float(1 << 21)) - 1.0
                sx = (ix + jx) * g
                sy = (iy + jy) * g
                d2 = (xs - sx) ** 2 + (ys - sy) ** 2
                if best_d2 is None:
                    best_d2 = d2
                    best_level = lvl
                else:
                    closer = d2 < best_d2
                    best_d2 = np.where(closer, d2, best_d2)
                    best_level = np.where(closer, lvl, best_level)
        return self.level_amp * best_level

    def __call__(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        out = np.full(xs.shape, 128.0)
        if self.level_amp > 0:
            out += self._cell_levels(xs, ys)
        for i in range(self.N_WAVES):
            out += self.amp[i] * np.cos(self.kx[i] * xs + self.ky[i] * ys + self.phase[i])
        return out


def _nearest_lens_centers(
    spec: SynthSpec, xs: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel center coordinates and lattice indices of the nearest microlens.

    Checks the three candidate lattice rows around each pixel; row spacing
    is below the pitch, so the true nearest lens is always among them.
    """
    geom = spec.geometry
    w = geom.pitch
    h = geom.row_step
    if spec.orientation is Orientation.HORIZONTAL:
        along, across = xs, ys
    else:
        along, across = ys, xs
    q0 = np.floor(across / h).astype(np.int64)
    best_d2 = None
    best_along = None
    best_across = None
    best_p = None
    best_q = None
    for dq in (0, 1, -1):
        q = q0 + dq
        cy = q * h
        offset = np.where(q % 2 != 0, spec.odd_row_offset_sign * w / 2.0, 0.0)
        p = np.round((along - offset) / w)
        cx = p * w + offset
        d2 = (along - cx) ** 2 + (across - cy) ** 2
        if best_d2 is None:
            best_d2, best_along, best_across = d2, cx, cy
            best_p, best_q = p.astype(np.int64), q
        else:
            closer = d2 < best_d2
            best_d2 = np.where(closer, d2, best_d2)
            best_along = np.where(closer, cx, best_along)
            best_across = np.where(closer, cy, best_across)
            best_p = np.where(closer, p.astype(np.int64), best_p)
            best_q = np.where(closer, q, best_q)
    if spec.orientation is Orientation.HORIZONTAL:
        return best_along, best_across, best_p, best_q
    return best_across, best_along, best_p, best_q


def _lens_offsets(p: np.ndarray, q: np.ndarray, seed: int, amplitude: float) -> np.ndarray:
    """Deterministic per-lens luma offsets in [-amplitude, amplitude].

    Hashes the lens lattice indices so adjacent micro-images differ the
    way depth parallax and focus variation make them differ on a real
    sensor; index-based hashing keeps whole-frame translations exact.
    """
    if amplitude == 0.0:
        return np.zeros(p.shape)
    u = _hash_u64(p, q, seed, 0x0FF5)
    unit = (u >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return amplitude * (2.0 * unit - 1.0)


def _render_canvas(spec: SynthSpec, margin_x: int, margin_y: int) -> np.ndarray:
    """Render the enlarged 8-bit canvas both frames are cropped from.

    Canvas coordinates are centered on the frame center so the lattice
    phase does not depend on the margins.
    """
    texture = _SceneTexture(spec.texture_seed, spec.d, spec.texture_contrast)
    cw = spec.width + 2 * margin_x
    ch = spec.height + 2 * margin_y
    x0 = -margin_x - spec.width / 2.0
    y0 = -margin_y - spec.height / 2.0
    radius = spec.fill_ratio * spec.d / 2.0
    canvas = np.empty((ch, cw), dtype=np.uint8)
    # render in bands to bound the per-step working set
    band = max(1, int(4e6 // max(cw, 1)))
    for ys in range(0, ch, band):
        ye = min(ys + band, ch)
        yy, xx = np.meshgrid(
            np.arange(ys, ye, dtype=np.float64) + y0,
            np.arange(cw, dtype=np.float64) + x0,
            indexing="ij",
        )
        cx, cy, lp, lq = _nearest_lens_centers(spec, xx, yy)
        rx = xx - cx
        ry = yy - cy
        r2 = rx * rx + ry * ry
        inside = r2 <= radius * radius
        values = texture(cx + rx * spec.relay_scale, cy + ry * spec.relay_scale)
        values += _lens_offsets(lp, lq, spec.texture_seed, spec.lens_variation)
        if spec.vignette:
            # mild radial rolloff toward (not onto) the gap level: real
            # micro-images stay bright across the disc and only the rim
            # darkens, which keeps 16x16 blocks content-filled everywhere
            # and the disc edges soft
            profile = 1.0 - 0.75 * (r2 / (radius * radius)) ** 1.5
            values = GAP_LUMA + (values - GAP_LUMA) * profile
        values = np.where(inside, values, float(GAP_LUMA))
        canvas[ys:ye] = np.clip(np.rint(values), 0, 255).astype(np.uint8)
    return canvas


def render_reference(spec: SynthSpec) -> Frame:
    """Deterministic reference frame for the given spec (same seed, same bits)."""
    return Frame(_render_canvas(spec, 0, 0))


def render_pair(spec: SynthSpec) -> tuple[Frame, Frame, Candidate]:
    """(current, reference, truth) with cur[p] == ref[p + truth] exactly at noise 0."""
    truth = truth_motion(spec)
    mx, my = abs(truth.x), abs(truth.y)
    if 2 * mx >= spec.width or 2 * my >= spec.height:
        raise ShiftExitsFrameError(
            f"motion ({truth.x}, {truth.y}) too large for a {spec.width}x{spec.height} frame"
        )
    canvas = _render_canvas(spec, mx, my)
    ref = canvas[my : my + spec.height, mx : mx + spec.width]
    cur = canvas[my + truth.y : my + truth.y + spec.height, mx + truth.x : mx + truth.x + spec.width]
    if spec.noise_sigma > 0:
        rng = np.random.default_rng([spec.texture_seed & 0xFFFFFFFF, 0xA015E])
        noisy = cur.astype(np.float64) + rng.normal(0.0, spec.noise_sigma, cur.shape)
        cur = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    else:
        cur = cur.copy()
    return Frame(cur), Frame(ref.copy()), truth


def save_pair(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Render a pair and write cur.y / ref.y raw planes plus a pair.json sidecar.

    Returns the sidecar dictionary (paths, spec echo, ground truth).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cur, ref, truth = render_pair(spec)
    cur_path = out / "cur.y"
    ref_path = out / "ref.y"
    cur.luma.tofile(cur_path)
    ref.luma.tofile(ref_path)
    meta = {
        "format": "y",
        "width": spec.width,
        "height": spec.height,
        "d": spec.d,
        "orientation": spec.orientation.value,
        "texture_seed": spec.texture_seed,
        "vignette": spec.vignette,
        "noise_sigma": spec.noise_sigma,
        "texture_contrast": spec.texture_contrast,
        "relay_scale": spec.relay_scale,
        "fill_ratio": spec.fill_ratio,
        "lens_variation": spec.lens_variation,
        "odd_row_offset_sign": spec.odd_row_offset_sign,
        "lattice_shift": list(spec.motion.lattice_shift),
        "deviation": list(spec.motion.deviation),
        "truth_mv": [truth.x, truth.y],
        "cur": cur_path.name,
        "ref": ref_path.name,
    }
    with open(out / "pair.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")
    return meta
