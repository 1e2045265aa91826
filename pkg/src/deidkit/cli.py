"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import faceswap, pipeline, synth
from . import keypoints as kpm
from . import report as rpt
from .errors import ConfigError, DataError, DeidError
from .formats import load_checkpoint, save_checkpoint
from .raster import RasterImage, read_raster, write_raster


def _add_common(parser, out_required=True):
    parser.add_argument("--out", required=out_required, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deidkit",
                                     description="Face de-identification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for method in ("mask", "blur"):
        p = sub.add_parser(f"deid-{method}",
                           help=f"apply the {method} transform to frames with face boxes")
        p.add_argument("--frames", required=True, help="input frame directory")
        p.add_argument("--manifest", required=True, help="face-box manifest CSV")
        p.add_argument("--out", required=True)

    p = sub.add_parser("swap-train", help="train the toy shared-encoder swap model")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--n-samples", type=int, default=256,
                   help="synthetic samples per identity")

    p = sub.add_parser("swap-apply", help="swap 16x16 grayscale frames to identity Y")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--to-identity", choices=("X", "Y"), default="Y")

    p = sub.add_parser("eval-keypoints",
                       help="OKS/AP/AR of method pose dirs against the originals")
    p.add_argument("--original", required=True, help="ground-truth pose JSON directory")
    p.add_argument("--method", action="append", required=True, metavar="NAME=DIR",
                   help="method pose directory, repeatable")
    p.add_argument("--mode", choices=("fraction", "ranked"), default="fraction")
    p.add_argument("--select-largest", action="store_true",
                   help="pick the largest person when a file has several")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval-identity",
                       help="descriptor distance table, ROC and threshold matching")
    p.add_argument("--descriptors", required=True, help="descriptor CSV")
    p.add_argument("--pairing", required=True, help="swapped/original pairing CSV")
    p.add_argument("--target-subset", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate the bundled synthetic dataset")
    _add_common(p)

    p = sub.add_parser("report", help="re-emit CSV and plots from a report JSON")
    p.add_argument("--report-json", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run-all",
                       help="synthetic dataset, deid passes, evaluation and report")
    _add_common(p)
    p.add_argument("--mode", choices=("fraction", "ranked"), default="fraction")
    p.add_argument("--config", help="optional config file with OKS overrides")
    return parser


def _cmd_deid(args, method: str) -> None:
    log = pipeline.run_deid(args.frames, args.manifest, args.out, method)
    print(f"{method}: processed {log.processed}, skipped {log.skipped}")
    for frame_id in log.skipped_ids:
        print(f"  skipped {frame_id} (no face box)")


def _cmd_swap_train(args) -> None:
    spec_x, spec_y = synth.default_identity_specs()
    dataset = synth.gen_identity_dataset(spec_x, spec_y, args.n_samples, seed=args.seed)
    model = faceswap.init_model(args.seed)
    cfg = faceswap.TrainConfig(batch_size=args.batch_size,
                               learning_rate=args.learning_rate,
                               momentum=args.momentum, steps=args.steps, seed=args.seed)
    history = faceswap.train(model, dataset, cfg)
    save_checkpoint(model, args.out)
    if history:
        first = sum(history[0])
        last = sum(history[-1])
        print(f"trained {len(history)} steps: loss {first:.6f} -> {last:.6f}")
    print(f"checkpoint written to {args.out}")


def _cmd_swap_apply(args) -> None:
    model = load_checkpoint(args.checkpoint)
    frames = pipeline.list_frames(Path(args.frames))
    if not frames:
        raise DataError(f"{args.frames}: no raster frames found")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for frame_path in frames:
        img = read_raster(frame_path)
        if img.channels != 1 or (img.width, img.height) != (faceswap.IMAGE_SIDE,) * 2:
            raise DataError(f"{frame_path}: swap-apply needs 16x16 single-channel frames")
        pixels = img.data[:, :, 0].astype(np.float64) / 255.0
        swapped = faceswap.swap(model, pixels, to_identity=args.to_identity)
        out = np.clip(np.floor(swapped * 255.0 + 0.5), 0, 255).astype(np.uint8)
        write_raster(RasterImage.from_array(out), out_dir / frame_path.name)
    print(f"swapped {len(frames)} frames to identity {args.to_identity}")


def _parse_method_dirs(entries) -> dict[str, Path]:
    dirs = {}
    for entry in entries:
        if "=" not in entry:
            raise ConfigError(f"--method needs NAME=DIR, got {entry!r}")
        name, _, value = entry.partition("=")
        if name in dirs:
            raise ConfigError(f"duplicate method name {name!r}")
        dirs[name] = Path(value)
    return dirs


def _cmd_eval_keypoints(args) -> None:
    section = pipeline.evaluate_pose_dirs(args.original, _parse_method_dirs(args.method),
                                          kpm.OksConfig(), mode=args.mode,
                                          select_largest=args.select_largest)
    report = rpt.build_report({"mode": args.mode, "config_hash": rpt.config_hash(vars(args))},
                              keypoints=section)
    _write_report(report, args.out)


def _cmd_eval_identity(args) -> None:
    section = pipeline.evaluate_identity(args.descriptors, args.pairing, args.target_subset)
    report = rpt.build_report({"config_hash": rpt.config_hash(vars(args))},
                              identity=section)
    _write_report(report, args.out)


def _write_report(report: dict, out: str) -> None:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rpt.emit_report(report, out_dir / "report.json", format="json")
    rpt.emit_report(report, out_dir / "report.csv", format="csv")
    rpt.emit_plots(report, out_dir / "plots")
    print(f"report written to {out_dir / 'report.json'}")


def _cmd_synth(args) -> None:
    paths = pipeline.gen_synthetic_dataset(args.out, args.seed)
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")


def _cmd_report(args) -> None:
    import json

    path = Path(args.report_json)
    if not path.exists():
        raise DataError(f"{path}: report file not found")
    report = json.loads(path.read_text(encoding="utf-8"))
    if report.get("schema_version") != rpt.REPORT_SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported report schema {report.get('schema_version')}")
    _write_report(report, args.out)


def _cmd_run_all(args) -> None:
    oks_cfg = None
    if args.config:
        oks_cfg = pipeline.load_config(args.config).oks
    pipeline.run_all(args.out, seed=args.seed, oks_cfg=oks_cfg, mode=args.mode)
    print(f"pipeline outputs written under {args.out}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "deid-mask": lambda a: _cmd_deid(a, "mask"),
        "deid-blur": lambda a: _cmd_deid(a, "blur"),
        "swap-train": _cmd_swap_train,
        "swap-apply": _cmd_swap_apply,
        "eval-keypoints": _cmd_eval_keypoints,
        "eval-identity": _cmd_eval_identity,
        "synth": _cmd_synth,
        "report": _cmd_report,
        "run-all": _cmd_run_all,
    }
    try:
        handlers[args.command](args)
    except DeidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
