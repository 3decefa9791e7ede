"""Raw video ingestion, experiment configuration, and report persistence.

Configs are strict JSON: unknown keys are rejected and missing required
fields are reported by name.  Reports are written atomically (temp file
plus rename) so a crashed run never leaves a truncated report behind.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .cost import Frame
from .errors import ConfigError, FrameIndexError, SizeMismatchError
from .geometry import Orientation, RingShape
from .metrics import REPORT_COLUMNS, StrategyReport
from .search import SearchConfig
from .synth import MotionSpec, SynthSpec

STRATEGY_NAMES = ("fs", "tzs", "mfme", "mtss", "mcpns")


# ----------------------------------------------------------------------------
# sequence metadata and raw frame reading
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceMeta:
    """Shape and optics of one raw sequence file."""

    name: str
    width: int
    height: int
    frame_count: int
    format: str = "yuv420"  # "y" (luma only) or "yuv420" (planar 4:2:0)
    d: float = 23.0
    orientation: Orientation = Orientation.HORIZONTAL
    s: float | None = None
    fps: float = 30.0
    bit_depth: int = 8

    def __post_init__(self):
        if self.format not in ("y", "yuv420"):
            raise ConfigError(f"unknown raw format {self.format!r} (expected 'y' or 'yuv420')")
        if self.bit_depth != 8:
            raise ConfigError(
                f"only 8-bit sequences are supported, got bit_depth={self.bit_depth}; "
                "convert 10-bit input before use"
            )
        if self.width < 1 or self.height < 1 or self.frame_count < 1:
            raise ConfigError("width, height and frame_count must be positive")
        if self.format == "yuv420" and (self.width % 2 or self.height % 2):
            raise ConfigError("4:2:0 sequences need even width and height")

    @property
    def frame_bytes(self) -> int:
        luma = self.width * self.height
        return luma if self.format == "y" else luma * 3 // 2


def read_yuv_luma(path: str | Path, meta: SequenceMeta, frame_index: int) -> Frame:
    """Read the Y plane of one frame; chroma is skipped by offset arithmetic."""
    if not 0 <= frame_index < meta.frame_count:
        raise FrameIndexError(
            f"frame {frame_index} out of range [0, {meta.frame_count}) for {path}"
        )
    path = Path(path)
    expected = meta.frame_count * meta.frame_bytes
    actual = path.stat().st_size
    if actual != expected:
        raise SizeMismatchError(
            f"{path} is {actual} bytes but {meta.name}: "
            f"{meta.frame_count} x {meta.frame_bytes} = {expected} bytes expected"
        )
    luma_bytes = meta.width * meta.height
    with open(path, "rb") as f:
        f.seek(frame_index * meta.frame_bytes)
        data = f.read(luma_bytes)
    if len(data) != luma_bytes:
        raise SizeMismatchError(f"short read of frame {frame_index} from {path}")
    plane = np.frombuffer(data, dtype=np.uint8).reshape(meta.height, meta.width)
    return Frame(plane.copy())


# ----------------------------------------------------------------------------
# bundled sequence presets (desk-scale stand-ins for the MPEG dataset specs)
# ----------------------------------------------------------------------------


def _load_presets() -> dict[str, dict]:
    text = resources.files("plenome").joinpath("data/presets.json").read_text()
    return json.loads(text)


PRESETS: dict[str, dict] = _load_presets()


def get_preset(name: str) -> dict:
    """Bundled (resolution, d, s, orientation) parameters for a known sequence."""
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None


# ----------------------------------------------------------------------------
# experiment configuration
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSource:
    """A frame pair taken from a raw sequence file."""

    path: str
    meta: SequenceMeta
    cur_frame: int = 1
    ref_frame: int = 0


@dataclass
class ExperimentConfig:
    source: SynthSpec | SequenceSource
    search: SearchConfig
    strategies: list[str] = field(default_factory=lambda: ["fs", "mcpns"])
    pmv: tuple[int, int] = (0, 0)
    threads: int = 1
    trace: bool = False

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("strategies must be non-empty")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigError(
                    f"unknown strategy {s!r}; available: {', '.join(STRATEGY_NAMES)}"
                )
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing required field {key!r} in {where}")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")


def _orientation(value: str | None, where: str) -> Orientation | None:
    if value is None:
        return None
    try:
        return Orientation(value)
    except ValueError:
        raise ConfigError(f"{where}: orientation must be 'horizontal' or 'vertical'") from None


def synth_spec_from_json(obj: dict) -> SynthSpec:
    allowed = {
        "width", "height", "d", "orientation", "texture_seed", "vignette",
        "noise_sigma", "texture_contrast", "relay_scale", "fill_ratio",
        "lens_variation", "odd_row_offset_sign", "lattice_shift", "deviation",
    }
    _check_keys(obj, allowed, "synth")
    ori = _orientation(obj.get("orientation", "horizontal"), "synth")
    assert ori is not None
    motion = MotionSpec(
        lattice_shift=tuple(obj.get("lattice_shift", (0, 0))),
        deviation=tuple(obj.get("deviation", (0, 0))),
    )
    return SynthSpec(
        width=int(_require(obj, "width", "synth")),
        height=int(_require(obj, "height", "synth")),
        d=float(_require(obj, "d", "synth")),
        orientation=ori,
        texture_seed=int(obj.get("texture_seed", 0)),
        vignette=bool(obj.get("vignette", True)),
        motion=motion,
        noise_sigma=float(obj.get("noise_sigma", 0.0)),
        texture_contrast=float(obj.get("texture_contrast", 1.0)),
        relay_scale=float(obj.get("relay_scale", 1.05)),
        fill_ratio=float(obj.get("fill_ratio", 0.97)),
        lens_variation=float(obj.get("lens_variation", 34.0)),
        odd_row_offset_sign=int(obj.get("odd_row_offset_sign", 1)),
    )


def _synth_to_json(spec: SynthSpec) -> dict:
    return {
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
    }


def _meta_from_json(obj: dict, where: str) -> SequenceMeta:
    allowed = {
        "name", "width", "height", "frame_count", "format", "d",
        "orientation", "s", "fps", "bit_depth",
    }
    _check_keys(obj, allowed, where)
    ori = _orientation(obj.get("orientation", "horizontal"), where)
    assert ori is not None
    s = obj.get("s")
    return SequenceMeta(
        name=str(obj.get("name", "sequence")),
        width=int(_require(obj, "width", where)),
        height=int(_require(obj, "height", where)),
        frame_count=int(_require(obj, "frame_count", where)),
        format=str(obj.get("format", "yuv420")),
        d=float(_require(obj, "d", where)),
        orientation=ori,
        s=float(s) if s is not None else None,
        fps=float(obj.get("fps", 30.0)),
        bit_depth=int(obj.get("bit_depth", 8)),
    )


def _meta_to_json(meta: SequenceMeta) -> dict:
    return {
        "name": meta.name,
        "width": meta.width,
        "height": meta.height,
        "frame_count": meta.frame_count,
        "format": meta.format,
        "d": meta.d,
        "orientation": meta.orientation.value,
        "s": meta.s,
        "fps": meta.fps,
        "bit_depth": meta.bit_depth,
    }


def _sequence_from_json(obj: dict) -> SequenceSource:
    allowed = {"path", "meta", "preset", "frame_count", "cur_frame", "ref_frame"}
    _check_keys(obj, allowed, "sequence")
    path = str(_require(obj, "path", "sequence"))
    if "preset" in obj:
        if "meta" in obj:
            raise ConfigError("sequence: give either 'preset' or 'meta', not both")
        preset = get_preset(str(obj["preset"]))
        meta_obj = {
            "name": preset["name"],
            "width": preset["width"],
            "height": preset["height"],
            "frame_count": int(_require(obj, "frame_count", "sequence (with preset)")),
            "format": preset["format"],
            "d": preset["d"],
            "orientation": preset["orientation"],
            "s": preset["s"],
            "fps": preset["fps"],
        }
        meta = _meta_from_json(meta_obj, "sequence.preset")
    else:
        meta = _meta_from_json(dict(_require(obj, "meta", "sequence")), "sequence.meta")
    return SequenceSource(
        path=path,
        meta=meta,
        cur_frame=int(obj.get("cur_frame", 1)),
        ref_frame=int(obj.get("ref_frame", 0)),
    )


def _search_from_json(obj: dict, source_d: float, source_ori: Orientation | None,
                      source_s: float | None) -> SearchConfig:
    allowed = {
        "window", "d", "shape", "top_k", "s", "orientation", "block",
        "early_termination", "raster_threshold", "square_radius", "cost",
        "enable_neighbors", "refine_recenter_cap", "round_diameter",
        "odd_row_offset_sign",
    }
    _check_keys(obj, allowed, "search")
    block = obj.get("block", [16, 16])
    if isinstance(block, int):
        block = [block, block]
    if len(block) != 2:
        raise ConfigError("search.block must be an int or a [bw, bh] pair")
    shape_name = obj.get("shape", "rhombus")
    try:
        shape = RingShape(shape_name)
    except ValueError:
        raise ConfigError("search.shape must be 'rhombus' or 'hexagon'") from None
    # source values fill in only when a key is absent; an explicit null stays null
    s = obj["s"] if "s" in obj else source_s
    ori = _orientation(obj["orientation"], "search") if "orientation" in obj else source_ori
    try:
        return SearchConfig(
            half_width=int(obj.get("window", 64)),
            d=float(obj["d"] if "d" in obj else source_d),
            shape=shape,
            top_k=int(obj.get("top_k", 16)),
            matching_distance=float(s) if s is not None else None,
            orientation_known=ori,
            block_w=int(block[0]),
            block_h=int(block[1]),
            early_termination=bool(obj.get("early_termination", True)),
            raster_threshold=int(obj.get("raster_threshold", 5)),
            square_radius=int(obj.get("square_radius", 2)),
            cost=str(obj.get("cost", "sad")),
            enable_neighbors=bool(obj.get("enable_neighbors", True)),
            refine_recenter_cap=int(obj.get("refine_recenter_cap", 8)),
            round_diameter=bool(obj.get("round_diameter", False)),
            odd_row_offset_sign=int(obj.get("odd_row_offset_sign", 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"search: {exc}") from None


def _search_to_json(cfg: SearchConfig) -> dict:
    return {
        "window": cfg.half_width,
        "d": cfg.d,
        "shape": cfg.shape.value,
        "top_k": cfg.top_k,
        "s": cfg.matching_distance,
        "orientation": cfg.orientation_known.value if cfg.orientation_known else None,
        "block": [cfg.block_w, cfg.block_h],
        "early_termination": cfg.early_termination,
        "raster_threshold": cfg.raster_threshold,
        "square_radius": cfg.square_radius,
        "cost": cfg.cost,
        "enable_neighbors": cfg.enable_neighbors,
        "refine_recenter_cap": cfg.refine_recenter_cap,
        "round_diameter": cfg.round_diameter,
        "odd_row_offset_sign": cfg.odd_row_offset_sign,
    }


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment config; fails fast on unknown keys."""
    try:
        with open(path) as f:
            obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    allowed = {"synth", "sequence", "strategies", "search", "pmv", "threads", "trace"}
    _check_keys(obj, allowed, "config")
    has_synth = "synth" in obj
    has_seq = "sequence" in obj
    if has_synth == has_seq:
        raise ConfigError("config needs exactly one of 'synth' or 'sequence'")
    if has_synth:
        source: SynthSpec | SequenceSource = synth_spec_from_json(dict(obj["synth"]))
        source_d, source_ori, source_s = source.d, source.orientation, None
    else:
        source = _sequence_from_json(dict(obj["sequence"]))
        source_d, source_ori, source_s = source.meta.d, source.meta.orientation, source.meta.s
    search = _search_from_json(dict(obj.get("search", {})), source_d, source_ori, source_s)
    pmv = obj.get("pmv", [0, 0])
    if not (isinstance(pmv, list) and len(pmv) == 2):
        raise ConfigError("pmv must be an [x, y] pair")
    return ExperimentConfig(
        source=source,
        search=search,
        strategies=list(obj.get("strategies", ["fs", "mcpns"])),
        pmv=(int(pmv[0]), int(pmv[1])),
        threads=int(obj.get("threads", 1)),
        trace=bool(obj.get("trace", False)),
    )


def config_to_json(cfg: ExperimentConfig) -> dict:
    out: dict = {}
    if isinstance(cfg.source, SynthSpec):
        out["synth"] = _synth_to_json(cfg.source)
    else:
        out["sequence"] = {
            "path": cfg.source.path,
            "meta": _meta_to_json(cfg.source.meta),
            "cur_frame": cfg.source.cur_frame,
            "ref_frame": cfg.source.ref_frame,
        }
    out["search"] = _search_to_json(cfg.search)
    out["strategies"] = list(cfg.strategies)
    out["pmv"] = list(cfg.pmv)
    out["threads"] = cfg.threads
    out["trace"] = cfg.trace
    return out


def write_config(cfg: ExperimentConfig, path: str | Path) -> None:
    _atomic_write_text(path, json.dumps(config_to_json(cfg), indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------
# report and trace persistence
# ----------------------------------------------------------------------------


def _atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(obj: dict, path: str | Path) -> None:
    """Write a JSON document atomically with stable key order."""
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_report_csv(reports: list[StrategyReport], path: str | Path) -> None:
    """Flat CSV, one row per strategy, fixed column order (see REPORT_COLUMNS)."""
    import io as _stringio

    buf = _stringio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        row = rep.row()
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in REPORT_COLUMNS})
    _atomic_write_text(path, buf.getvalue())


def write_trace(block_traces: list[tuple[int, list]], path: str | Path) -> None:
    """One line per evaluated candidate: block id, stage, x, y, cost."""
    lines = ["block_id,stage,x,y,cost"]
    for block_id, trace in block_traces:
        for cand, cost in trace:
            lines.append(f"{block_id},{cand.stage.value},{cand.x},{cand.y},{cost}")
    _atomic_write_text(path, "\n".join(lines) + "\n")
