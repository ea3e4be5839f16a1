"""Command-line toolchain.

Exit codes: 0 success, 2 input or parse error, 3 numeric or degeneracy error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

from .descent import DivergenceError, FitConfig, compare_variants, fit_heatmap, variants_table
from .edsnt import edsnt_extract
from .formats import (
    SchemaError,
    dump_json,
    estimate_to_json,
    gaussian_to_json,
    label_file_to_json,
    load_json,
    parse_dims,
    parse_label_file,
    parse_manifest,
    parse_size,
    parse_speedplus,
    parse_views,
    views_from_labels,
)
from .geometry import DegenerateGeometryError, Pose, gaussian_to_ellipse
from .metrics import DEFAULT_MHD_POINTS, DEFAULT_SUPERSAMPLE, evaluate_batch
from .occupancy import GohmFormatError, labels_from_pose, normalized_to_pixel, read_gohm, write_gohm
from .reconstruction import closure_residual, decompose_dual_quadric, reconstruction_errors, triangulate_ellipsoid

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _emit(doc, out: str | None) -> None:
    text = dump_json(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen_labels(args) -> int:
    if args.format == "speedplus":
        if not args.camera:
            raise CliError("--format speedplus requires --camera", EXIT_INPUT)
        manifest = parse_speedplus(load_json(args.manifest), load_json(args.camera))
    else:
        manifest = parse_manifest(load_json(args.manifest))
    default_dims = parse_dims(args.dims) if args.dims else None
    heatmap_size = parse_size(args.heatmap_size)

    def one(rec):
        cam = rec.camera or manifest.camera
        dims = manifest.objects[rec.object] if rec.object else default_dims
        if dims is None:
            return None, {"id": rec.id, "error": "no dimensions: pass --dims or name an object"}
        try:
            pose = Pose.from_quaternion(rec.quaternion, rec.translation)
            return labels_from_pose(cam.intrinsics, pose, dims, (cam.width, cam.height), heatmap_size, rec.id), None
        except ValueError as exc:
            return None, {"id": rec.id, "error": str(exc)}

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(one, manifest.records))
    labels = [l for l, _ in results if l is not None]
    errors = sorted((e for _, e in results if e is not None), key=lambda e: e["id"])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "labels.json").write_text(dump_json(label_file_to_json(labels, errors)))
    if args.emit_heatmaps:
        for l in labels:
            write_gohm(out / f"{l.image_id}.gohm", l.heatmap())
    for e in errors:
        print(f"record {e['id']}: {e['error']}", file=sys.stderr)
    return EXIT_NUMERIC if errors else EXIT_OK


def cmd_extract(args) -> int:
    results = []
    for path in args.heatmaps:
        try:
            z = read_gohm(path)
        except OSError as exc:
            raise CliError(f"{path}: {exc.strerror}", EXIT_INPUT)
        try:
            g = edsnt_extract(z)
        except ValueError as exc:
            raise CliError(f"{path}: {exc}", EXIT_INPUT)
        H, W = z.shape
        gp = normalized_to_pixel(g, W, H)
        results.append({
            "file": str(path),
            "size": [W, H],
            "normalized": gaussian_to_json(g),
            "pixel": gaussian_to_json(gp),
            "ellipse": asdict(gaussian_to_ellipse(gp)) if gp.is_positive_definite else None,
        })
    _emit({"schema_version": 1, "results": results}, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = {l.image_id: l.ellipse for l in parse_label_file(load_json(args.pred))}
    gt = {l.image_id: l.ellipse for l in parse_label_file(load_json(args.gt))}
    try:
        report = evaluate_batch(pred, gt, args.supersample, args.mhd_points)
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_INPUT)
    _emit(report.to_json(), args.out)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    if bool(args.views) == bool(args.labels):
        raise CliError("pass exactly one of --views or --labels", EXIT_INPUT)
    if args.views:
        views, gt = parse_views(load_json(args.views))
    else:
        views, gt = views_from_labels(parse_label_file(load_json(args.labels)))
    Q = triangulate_ellipsoid(views)
    est = decompose_dual_quadric(Q)
    doc = {"schema_version": 1, "estimate": estimate_to_json(est), "closure_residual": closure_residual(Q, views), "n_views": len(views)}
    if gt is not None:
        doc["errors"] = asdict(reconstruction_errors(est, gt))
    _emit(doc, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    labels = {l.image_id: l for l in parse_label_file(load_json(args.labels))}
    if args.id not in labels:
        raise CliError(f"label id {args.id!r} not found in {args.labels}", EXIT_INPUT)
    target = labels[args.id]
    grid = parse_size(args.heatmap_size) if args.heatmap_size else target.heatmap_size
    cfg = FitConfig(grid=grid, iterations=args.iters, lr=args.lr, lam=args.lam, seed=args.seed, loss=args.loss)
    if args.compare:
        _emit(variants_table(compare_variants(target, cfg, check_truncation=not args.allow_truncated)), args.out)
        return EXIT_OK
    snapshots = [] if args.snapshots else None
    trace = fit_heatmap(target, cfg, check_truncation=not args.allow_truncated, snapshot_every=args.snapshot_every if args.snapshots else 0, snapshots=snapshots)
    if args.snapshots:
        d = Path(args.snapshots)
        d.mkdir(parents=True, exist_ok=True)
        for n, z in enumerate(snapshots):
            write_gohm(d / f"{args.id}_{n * args.snapshot_every:06d}.gohm", z)
    _emit(trace.to_json(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="occupancy3d", description="3D-aware Gaussian occupancy labels: generation, extraction, evaluation, reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-labels", help="generate labels from a pose manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", choices=("native", "speedplus"), default="native")
    p.add_argument("--camera", help="camera JSON (speedplus format only)")
    p.add_argument("--dims", help="full object dimensions in metres, e.g. 0.80,0.75,0.32")
    p.add_argument("--heatmap-size", default="64x64")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit-heatmaps", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_gen_labels)

    p = sub.add_parser("extract", help="E-DSNT parameters of GOHM heatmaps")
    p.add_argument("heatmaps", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="compare predicted and ground-truth label files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--supersample", type=int, default=DEFAULT_SUPERSAMPLE)
    p.add_argument("--mhd-points", type=int, default=DEFAULT_MHD_POINTS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reconstruct", help="triangulate an ellipsoid from multi-view ellipses")
    p.add_argument("--views")
    p.add_argument("--labels", help="label file with provenance (views built from stored poses)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("fit", help="gradient-descent fit of heatmap logits to a label")
    p.add_argument("--labels", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--heatmap-size")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", choices=("w", "js", "wjs"), default="wjs")
    p.add_argument("--compare", action="store_true", help="run all three loss variants")
    p.add_argument("--allow-truncated", action="store_true")
    p.add_argument("--snapshots", help="directory for GOHM heatmap snapshots")
    p.add_argument("--snapshot-every", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (SchemaError, GohmFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateGeometryError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
