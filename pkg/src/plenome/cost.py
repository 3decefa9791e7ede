"""Block-matching distortion between a current block and a displaced reference block."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfBoundsMvError
from .geometry import Candidate


@dataclass
class Frame:
    """Single 8-bit luma plane; `luma` is a (height, width) uint8 array.

    Frames are treated as immutable while a search pass runs.
    """

    luma: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.luma)
        if arr.ndim != 2:
            raise ValueError(f"luma must be 2-D (height, width), got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError(f"luma must be uint8, got {arr.dtype}")
        self.luma = np.ascontiguousarray(arr)

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @classmethod
    def from_flat(cls, samples: np.ndarray, width: int, height: int) -> "Frame":
        """Build from a row-major flat sample array of length width*height."""
        flat = np.asarray(samples, dtype=np.uint8)
        if flat.size != width * height:
            raise ValueError(
                f"expected {width * height} samples for {width}x{height}, got {flat.size}"
            )
        return cls(flat.reshape(height, width))


@dataclass(frozen=True)
class BlockRect:
    """Axis-aligned block: top-left (x0, y0), size bw x bh."""

    x0: int
    y0: int
    bw: int
    bh: int

    def __post_init__(self):
        if self.bw < 1 or self.bh < 1:
            raise ValueError(f"block size must be positive, got {self.bw}x{self.bh}")

    def inside(self, frame: Frame) -> bool:
        return (
            0 <= self.x0
            and 0 <= self.y0
            and self.x0 + self.bw <= frame.width
            and self.y0 + self.bh <= frame.height
        )

    def pixels(self, frame: Frame) -> np.ndarray:
        return frame.luma[self.y0 : self.y0 + self.bh, self.x0 : self.x0 + self.bw]


def mv_feasible(ref: Frame, block: BlockRect, mvx: int, mvy: int) -> bool:
    """True when the block displaced by (mvx, mvy) stays fully inside `ref`."""
    x = block.x0 + mvx
    y = block.y0 + mvy
    return 0 <= x and 0 <= y and x + block.bw <= ref.width and y + block.bh <= ref.height


def _displaced(ref: Frame, block: BlockRect, mv: Candidate) -> np.ndarray:
    if not mv_feasible(ref, block, mv.x, mv.y):
        raise OutOfBoundsMvError(
            f"mv ({mv.x}, {mv.y}) pushes block {block} outside the reference frame"
        )
    x = block.x0 + mv.x
    y = block.y0 + mv.y
    return ref.luma[y : y + block.bh, x : x + block.bw]


def sad(cur: Frame, ref: Frame, block: BlockRect, mv: Candidate) -> int:
    """Sum of absolute differences over the block; 0 iff the blocks are identical."""
    a = block.pixels(cur).astype(np.int32)
    b = _displaced(ref, block, mv).astype(np.int32)
    return int(np.abs(a - b).sum())


def ssd(cur: Frame, ref: Frame, block: BlockRect, mv: Candidate) -> int:
    """Sum of squared differences; alternative distortion for experiments."""
    a = block.pixels(cur).astype(np.int64)
    b = _displaced(ref, block, mv).astype(np.int64)
    d = a - b
    return int((d * d).sum())


COST_FUNCTIONS = {"sad": sad, "ssd": ssd}
