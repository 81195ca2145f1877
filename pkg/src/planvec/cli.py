"""Command-line front end: vectorize, reconstruct, evaluate, synth.

Exit codes: 0 success, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__, planio, reconstruct3d
from .extraction import PipelineConfig, extract_walls
from .planio import (GenerationError, ParseError, PlanVectorization,
                     SynthSpec)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def config_hash(cfg: PipelineConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _load_config(path: str | None) -> PipelineConfig:
    if path is not None:
        return PipelineConfig.from_json(Path(path).read_bytes())
    default = Path("planvec.json")
    if default.exists():
        return PipelineConfig.from_json(default.read_bytes())
    return PipelineConfig()


def _write_manifest(out_dir: Path, cfg: PipelineConfig, inputs: dict,
                    outputs: dict, counts: dict, timings_ms: dict,
                    diagnostics: list[str]):
    manifest = {
        "tool": "planvec",
        "version": __version__,
        "config_hash": config_hash(cfg),
        "inputs": inputs,
        "outputs": outputs,
        "counts": counts,
        "timings_ms": timings_ms,
        "diagnostics": diagnostics,
    }
    (out_dir / "manifest.json").write_bytes(
        (json.dumps(manifest, indent=2) + "\n").encode())


def cmd_vectorize(args) -> int:
    cfg = _load_config(args.config)
    mask_path = Path(args.mask)
    if not mask_path.exists():
        print(f"error: mask file not found: {mask_path}", file=sys.stderr)
        return EXIT_INPUT
    mask = planio.load_mask(mask_path.read_bytes())
    symbols = []
    if args.symbols:
        sym_path = Path(args.symbols)
        if not sym_path.exists():
            print(f"error: symbols file not found: {sym_path}", file=sys.stderr)
            return EXIT_INPUT
        symbols = planio.load_symbols(sym_path.read_bytes())

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    walls = extract_walls(mask, cfg)
    t_extract = (time.perf_counter() - t0) * 1000.0

    diagnostics = []
    if not walls:
        diagnostics.append("extraction produced no walls")
    plan = PlanVectorization(
        source_width=mask.shape[1], source_height=mask.shape[0],
        walls=walls, symbols=symbols, diagnostics=diagnostics)
    t0 = time.perf_counter()
    (out_dir / "plan.json").write_bytes(planio.plan_to_json(plan))
    (out_dir / "plan.svg").write_bytes(planio.emit_svg(plan))
    t_write = (time.perf_counter() - t0) * 1000.0
    _write_manifest(
        out_dir, cfg,
        inputs={"mask": str(mask_path),
                "symbols": str(args.symbols) if args.symbols else None},
        outputs={"plan": str(out_dir / "plan.json"),
                 "svg": str(out_dir / "plan.svg")},
        counts={"walls": len(walls), "symbols": len(symbols)},
        timings_ms={"extract": round(t_extract, 3), "write": round(t_write, 3)},
        diagnostics=diagnostics)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _load_config(args.config)
    plan_path = Path(args.plan)
    if not plan_path.exists():
        print(f"error: plan file not found: {plan_path}", file=sys.stderr)
        return EXIT_INPUT
    plan = planio.plan_from_json(plan_path.read_bytes())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    src = (plan.source_width, plan.source_height)

    t0 = time.perf_counter()
    matches, unmatched = reconstruct3d.match_openings(
        plan.walls, plan.symbols, *src)
    walls_by_id = {w.id: w for w in plan.walls}
    diagnostics = [f"symbol {i} ({plan.symbols[i].kind}) overlaps no wall"
                   for i in unmatched]
    openings = []
    for sym_idx, wall_id in matches:
        try:
            openings.append(reconstruct3d.fit_opening(
                plan.symbols[sym_idx], walls_by_id[wall_id], cfg, src))
        except reconstruct3d.OpeningRejected as e:
            diagnostics.append(f"symbol {sym_idx} rejected: {e}")
    scene = reconstruct3d.build_scene(plan.walls, openings, cfg, src)
    t_build = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    (out_dir / "model.obj").write_bytes(
        reconstruct3d.export_obj(scene, config_hash(cfg)))
    (out_dir / "model.json").write_bytes(
        reconstruct3d.export_semantic_json(scene))
    t_write = (time.perf_counter() - t0) * 1000.0
    _write_manifest(
        out_dir, cfg,
        inputs={"plan": str(plan_path)},
        outputs={"obj": str(out_dir / "model.obj"),
                 "semantic": str(out_dir / "model.json")},
        counts={"walls": len(plan.walls), "openings": len(openings),
                "unmatched_symbols": len(unmatched)},
        timings_ms={"build": round(t_build, 3), "write": round(t_write, 3)},
        diagnostics=diagnostics)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gt_path = Path(args.gt_mask)
    if not gt_path.exists():
        print(f"error: ground-truth mask not found: {gt_path}", file=sys.stderr)
        return EXIT_INPUT
    gt = planio.load_mask(gt_path.read_bytes())

    mask_iou = None
    vect_iou = None
    wall_count = None
    if args.pred_mask:
        pred = planio.load_mask(Path(args.pred_mask).read_bytes())
        if args.crop:
            pred, gt_c, _ = planio.crop_to_extent(pred, gt)
        else:
            gt_c = gt
            if pred.shape != gt.shape:
                print("error: dimension mismatch (use --crop?)", file=sys.stderr)
                return EXIT_INPUT
        mask_iou = planio.mean_iou(pred, gt_c)
    if args.plan:
        plan = planio.plan_from_json(Path(args.plan).read_bytes())
        rast = planio.rasterize_walls(plan.walls, gt.shape[1], gt.shape[0])
        gt_c = gt
        if args.crop:
            rast, gt_c, _ = planio.crop_to_extent(rast, gt)
        vect_iou = planio.mean_iou(rast, gt_c)
        wall_count = len(plan.walls)
    report = planio.MetricsReport(mask_iou=mask_iou, vectorized_iou=vect_iou,
                                  wall_count=wall_count)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_synth(args) -> int:
    base = SynthSpec()
    if args.spec:
        spec_path = Path(args.spec)
        if not spec_path.exists():
            print(f"error: spec file not found: {spec_path}", file=sys.stderr)
            return EXIT_INPUT
        doc = json.loads(spec_path.read_bytes())
        known = {f.name for f in dataclasses.fields(SynthSpec)}
        unknown = sorted(set(doc) - known)
        if unknown:
            print(f"error: unknown spec fields: {unknown}", file=sys.stderr)
            return EXIT_INPUT
        for key in ("canvas", "wall_thickness_px"):
            if key in doc:
                doc[key] = tuple(doc[key])
        base = SynthSpec(**doc)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        spec = dataclasses.replace(base, seed=args.seed + i)
        mask, walls, symbols = planio.synth_plan(spec)
        plan = PlanVectorization(
            source_width=spec.canvas[0], source_height=spec.canvas[1],
            walls=walls, symbols=symbols)
        (out_dir / f"mask_{i:04d}.pgm").write_bytes(planio.save_pgm(mask))
        (out_dir / f"truth_{i:04d}.json").write_bytes(planio.plan_to_json(plan))
        (out_dir / f"symbols_{i:04d}.json").write_bytes(
            planio.dump_symbols(symbols))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planvec")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("vectorize", help="extract wall boxes from a mask")
    v.add_argument("--mask", required=True)
    v.add_argument("--symbols")
    v.add_argument("--config")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_vectorize)

    r = sub.add_parser("reconstruct", help="build a 3D model from a plan")
    r.add_argument("--plan", required=True)
    r.add_argument("--config")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("evaluate", help="IoU metrics against a ground truth")
    e.add_argument("--pred-mask")
    e.add_argument("--plan")
    e.add_argument("--gt-mask", required=True)
    e.add_argument("--crop", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", help="generate synthetic test plans")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--spec")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, GenerationError, ValueError, FileNotFoundError,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # pragma: no cover
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
