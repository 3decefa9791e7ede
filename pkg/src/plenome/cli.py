"""Command-line driver for batch experiments.

Subcommands: synth (render a frame pair), estimate (one strategy over all
blocks), compare (several strategies against the full-search oracle),
analyze (MV-distribution statistics from a stored oracle report), and
budget (candidate-count arithmetic for a given diameter / window / K).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as pio
from .cost import BlockRect, Frame
from .errors import PlenomeError
from .geometry import (
    Candidate,
    MlaGeometry,
    Orientation,
    fast_mcp_count,
    mcp_lattice_count,
    neighbor_count,
    refinement_count,
    total_budget,
)
from .metrics import EvalRecord, StrategyOutcome, build_report, deviation_buckets, hit_rate_at_mcp
from .search import STRATEGIES, SearchConfig
from .synth import SynthSpec, render_pair, save_pair

THREADS_ENV = "PLENOME_THREADS"


# ----------------------------------------------------------------------------
# block tiling and the parallel per-block harness
# ----------------------------------------------------------------------------


def tile_blocks(width: int, height: int, bw: int, bh: int) -> list[BlockRect]:
    """Tile the frame into bw x bh blocks; edge blocks are truncated."""
    blocks = []
    for y0 in range(0, height, bh):
        for x0 in range(0, width, bw):
            blocks.append(
                BlockRect(x0, y0, min(bw, width - x0), min(bh, height - y0))
            )
    return blocks


def interior_blocks(
    blocks: list[BlockRect], frame: Frame, half_width: int, pmv: tuple[int, int]
) -> list[BlockRect]:
    """Blocks whose entire search window keeps the displaced block in-frame."""
    out = []
    for b in blocks:
        if (
            b.x0 + pmv[0] - half_width >= 0
            and b.y0 + pmv[1] - half_width >= 0
            and b.x0 + b.bw + pmv[0] + half_width <= frame.width
            and b.y0 + b.bh + pmv[1] + half_width <= frame.height
        ):
            out.append(b)
    return out


def _run_one_block(
    cur: Frame,
    ref: Frame,
    block: BlockRect,
    strategies: list[str],
    pmv: Candidate,
    cfg: SearchConfig,
    trace: bool,
) -> dict[str, dict]:
    """Run each strategy on one block; timing is wall-clock per search."""
    out: dict[str, dict] = {}
    for name in strategies:
        fn = STRATEGIES[name]
        t0 = time.perf_counter_ns()
        res = fn(cur, ref, block, pmv, cfg, trace=trace)
        micros = (time.perf_counter_ns() - t0) / 1000.0
        out[name] = {
            "mv": (res.best_mv.x, res.best_mv.y),
            "cost": res.best_cost,
            "points": res.points_evaluated,
            "stage": res.stage_of_best.value,
            "micros": micros,
            "trace": res.trace,
        }
    return out


def run_blocks(
    cur: Frame,
    ref: Frame,
    blocks: list[BlockRect],
    strategies: list[str],
    pmv: tuple[int, int],
    cfg: SearchConfig,
    threads: int = 1,
    trace: bool = False,
) -> list[dict[str, dict]]:
    """Run strategies over blocks, in parallel when threads > 1.

    Results are merged by block index, never by completion order, so the
    thread count only changes wall time.
    """
    pmv_c = Candidate(pmv[0], pmv[1])
    if threads <= 1:
        return [
            _run_one_block(cur, ref, b, strategies, pmv_c, cfg, trace) for b in blocks
        ]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_run_one_block, cur, ref, b, strategies, pmv_c, cfg, trace)
            for b in blocks
        ]
        return [f.result() for f in futures]


def load_frame_pair(cfg: pio.ExperimentConfig) -> tuple[Frame, Frame, dict]:
    """Materialize the configured frame pair; info carries geometry and truth."""
    if isinstance(cfg.source, SynthSpec):
        cur, ref, truth = render_pair(cfg.source)
        info = {
            "source": "synth",
            "d": cfg.source.d,
            "orientation": cfg.source.orientation,
            "truth_mv": [truth.x, truth.y],
        }
    else:
        src = cfg.source
        cur = pio.read_yuv_luma(src.path, src.meta, src.cur_frame)
        ref = pio.read_yuv_luma(src.path, src.meta, src.ref_frame)
        info = {
            "source": src.path,
            "d": src.meta.d,
            "orientation": src.meta.orientation,
            "truth_mv": None,
        }
    return cur, ref, info


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def _resolve_threads(args, default: int = 1) -> int:
    """--threads beats the PLENOME_THREADS env var, which beats the config."""
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, default)


def _cmd_synth(args) -> int:
    with open(args.spec) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise pio.ConfigError(f"{args.spec}: line {exc.lineno}: {exc.msg}") from None
    spec = pio.synth_spec_from_json(obj)
    meta = save_pair(spec, args.out)
    print(f"wrote {meta['cur']}, {meta['ref']} and pair.json to {args.out}")
    print(f"truth_mv = ({meta['truth_mv'][0]}, {meta['truth_mv'][1]})")
    return 0


def _block_payload(block: BlockRect, block_id: int, result: dict) -> dict:
    return {
        "id": block_id,
        "x0": block.x0,
        "y0": block.y0,
        "bw": block.bw,
        "bh": block.bh,
        "mv": list(result["mv"]),
        "cost": result["cost"],
        "points": result["points"],
        "stage": result["stage"],
    }


def _cmd_estimate(args) -> int:
    cfg = pio.load_config(args.config)
    threads = _resolve_threads(args, cfg.threads)
    cur, ref, info = load_frame_pair(cfg)
    blocks = tile_blocks(cur.width, cur.height, cfg.search.block_w, cfg.search.block_h)
    want_trace = args.trace or cfg.trace
    rows = run_blocks(cur, ref, blocks, [args.strategy], cfg.pmv, cfg.search,
                      threads, want_trace)
    payload = {
        "strategy": args.strategy,
        "width": cur.width,
        "height": cur.height,
        "block": [cfg.search.block_w, cfg.search.block_h],
        "window": cfg.search.half_width,
        "pmv": list(cfg.pmv),
        "d": info["d"],
        "orientation": info["orientation"].value,
        "truth_mv": info["truth_mv"],
        "blocks": [
            _block_payload(b, i, rows[i][args.strategy]) for i, b in enumerate(blocks)
        ],
    }
    payload["asp"] = sum(b["points"] for b in payload["blocks"]) / len(blocks)
    pio.write_json(payload, args.out)
    if want_trace:
        trace_path = Path(args.out).with_suffix(".trace.csv")
        pio.write_trace(
            [(i, rows[i][args.strategy]["trace"]) for i in range(len(blocks))], trace_path
        )
        print(f"wrote trace to {trace_path}")
    print(f"estimated {len(blocks)} blocks with {args.strategy}; report at {args.out}")
    return 0


def _cmd_compare(args) -> int:
    cfg = pio.load_config(args.config)
    threads = _resolve_threads(args, cfg.threads)
    strategies = args.strategies.split(",") if args.strategies else list(cfg.strategies)
    for s in strategies:
        if s not in STRATEGIES:
            raise pio.ConfigError(f"unknown strategy {s!r}")
    run_list = list(strategies)
    if "fs" not in run_list:
        run_list.insert(0, "fs")  # the oracle always runs
    cur, ref, info = load_frame_pair(cfg)
    blocks = tile_blocks(cur.width, cur.height, cfg.search.block_w, cfg.search.block_h)
    rows = run_blocks(cur, ref, blocks, run_list, cfg.pmv, cfg.search, threads)
    records = []
    for i, row in enumerate(rows):
        oracle = StrategyOutcome(
            mv=row["fs"]["mv"], cost=row["fs"]["cost"],
            points=row["fs"]["points"], micros=row["fs"]["micros"],
        )
        outcomes = {
            name: StrategyOutcome(
                mv=row[name]["mv"], cost=row[name]["cost"],
                points=row[name]["points"], micros=row[name]["micros"],
            )
            for name in run_list
        }
        records.append(EvalRecord(block_id=i, oracle=oracle, outcomes=outcomes))
    geom = MlaGeometry(cfg.search.d, info["orientation"], cfg.search.odd_row_offset_sign)
    reports = build_report(records, run_list, geom)
    pio.write_report_csv(reports, args.out)
    json_path = Path(args.out).with_suffix(".json")
    payload = {
        "blocks": len(blocks),
        "window": cfg.search.half_width,
        "d": cfg.search.d,
        "strategies": {r.strategy: r.row() for r in reports},
    }
    pio.write_json(payload, json_path)
    print(f"compared {', '.join(run_list)} on {len(blocks)} blocks")
    print(f"reports at {args.out} and {json_path}")
    return 0


def _parse_geom_flag(text: str) -> MlaGeometry:
    """Parse 'd=23.3,orient=h' style geometry flags."""
    d = None
    orient = Orientation.HORIZONTAL
    sign = 1
    for part in text.split(","):
        if not part:
            continue
        if "=" not in part:
            raise pio.ConfigError(f"--geom: expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        if key == "d":
            d = float(value)
        elif key in ("orient", "orientation"):
            if value in ("h", "horizontal"):
                orient = Orientation.HORIZONTAL
            elif value in ("v", "vertical"):
                orient = Orientation.VERTICAL
            else:
                raise pio.ConfigError(f"--geom: bad orientation {value!r}")
        elif key == "sign":
            sign = int(value)
        else:
            raise pio.ConfigError(f"--geom: unknown key {key!r}")
    if d is None:
        raise pio.ConfigError("--geom needs at least d=<diameter>")
    return MlaGeometry(d, orient, sign)


def _cmd_analyze(args) -> int:
    with open(args.oracle) as f:
        report = json.load(f)
    geom = _parse_geom_flag(args.geom)
    mvs = [tuple(b["mv"]) for b in report["blocks"]]
    buckets = deviation_buckets(mvs, geom)
    stats = {
        "count": len(mvs),
        "d": geom.d,
        "orientation": geom.orientation.value,
        "norm": "chebyshev",
        "hit_rate_at_mcp": hit_rate_at_mcp(mvs, geom),
        "hit_rate_within_1": buckets["p_le_1"],
        "buckets": buckets,
    }
    pio.write_json(stats, args.out)
    print(
        f"analyzed {len(mvs)} MVs: exact-at-lattice {stats['hit_rate_at_mcp']:.3f}, "
        f"within-1 {stats['hit_rate_within_1']:.3f}"
    )
    return 0


def _cmd_budget(args) -> int:
    geom = MlaGeometry(args.d, Orientation.HORIZONTAL)
    lines = [
        ("mcp_candidates", mcp_lattice_count(geom, args.W)),
        ("fast_mcp_candidates_per_orientation", fast_mcp_count(args.d, args.W)),
        ("neighbor_candidates_per_anchor", neighbor_count(args.d)),
        ("refinement_candidates_per_pass", refinement_count(args.d)),
        ("best_case_total", total_budget(args.d, args.W, args.K)),
    ]
    for key, value in lines:
        print(f"{key}={value}")
    return 0


# ----------------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error:usage: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plenome", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic frame pair to disk")
    p.add_argument("--spec", required=True, help="synth spec JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("estimate", help="run one strategy over all blocks")
    p.add_argument("--config", required=True)
    p.add_argument("--strategy", required=True, choices=sorted(STRATEGIES))
    p.add_argument("--out", required=True)
    p.add_argument("--trace", action="store_true", help="also write the evaluation trace")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("compare", help="run strategies against the full-search oracle")
    p.add_argument("--config", required=True)
    p.add_argument("--strategies", default=None, help="comma-separated list, e.g. fs,tzs,mcpns")
    p.add_argument("--out", required=True, help="CSV path; a JSON twin is written next to it")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("analyze", help="MV-distribution statistics from an oracle report")
    p.add_argument("--oracle", required=True, help="estimate report (strategy fs)")
    p.add_argument("--geom", required=True, help="lattice geometry, e.g. d=23,orient=h")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("budget", help="candidate-count arithmetic for d / W / K")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--W", type=int, required=True)
    p.add_argument("--K", type=int, default=16)
    p.set_defaults(fn=_cmd_budget)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PlenomeError as exc:
        sys.stderr.write(f"error:{exc.category}: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error:io-error: {exc}\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(f"error:invalid-argument: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
