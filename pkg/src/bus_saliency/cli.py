"""Command line front end.

Three subcommands: ``run`` scores a single image, ``batch`` walks a
directory of images with sibling ``<stem>_GT`` masks, and ``phantom``
renders a synthetic test image from a flat key=value description. Exit
codes are stable for scripting: 0 success, 1 usage error, 2 file I/O
error, 3 pipeline stage failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import PipelineConfig, load_config, parse_config_text
from .errors import (ImageFormatError, ImageIOError, PhantomSpecError,
                     PipelineStageError)
from .imaging import write_gray, write_mask
from .phantom import generate_phantom, parse_phantom_text
from .pipeline import batch_evaluate, process_image

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PIPELINE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which collides with the I/O code
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bus-saliency",
                     description="Tumor saliency maps for breast ultrasound images.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--emit-debug", action="store_true",
                       help="also write W/D/T cue maps and the layer raster")

    p_run = sub.add_parser("run", help="process a single image")
    p_run.add_argument("image", help="8-bit grayscale PNG or PGM")
    p_run.add_argument("--gt", help="ground-truth mask to score against")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_batch = sub.add_parser("batch", help="process a directory of images")
    p_batch.add_argument("directory")
    p_batch.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes")
    common(p_batch)
    p_batch.set_defaults(func=_cmd_batch)

    p_phantom = sub.add_parser("phantom", help="render a synthetic phantom")
    p_phantom.add_argument("--spec", required=True,
                           help="flat key=value phantom description")
    p_phantom.add_argument("--out", required=True, help="output directory")
    p_phantom.set_defaults(func=_cmd_phantom)
    return parser


def _build_config(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    for item in args.set or []:
        cfg = parse_config_text(item, base=cfg)
    return cfg


def _resolve_out(args, cfg: PipelineConfig, fallback: Path) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.out_dir:
        return Path(cfg.out_dir)
    return fallback


def _cmd_run(args) -> int:
    cfg = _build_config(args)
    out_dir = _resolve_out(args, cfg, Path("."))
    result, report = process_image(args.image, cfg, gt_path=args.gt,
                                   out_dir=out_dir, emit_debug=args.emit_debug)
    d = result.diagnostics
    print(f"regions={d['regions']} layers={d['layers']}"
          f" sigma2_sq={d['sigma2_sq']:.2f} iterations={d['iterations']}"
          f" converged={d['converged']} mean_saliency={d['mean_saliency']:.4f}")
    if report is not None:
        print(f"precision={report.precision:.4f} recall={report.recall:.4f}"
              f" f_measure={report.f_measure:.4f} mae={report.mae:.4f}")
    if not d["converged"]:
        print("warning: solver stopped before reaching tolerance", file=sys.stderr)
    return EXIT_OK


def _cmd_batch(args) -> int:
    cfg = _build_config(args)
    out_dir = _resolve_out(args, cfg, Path(args.directory) / "results")
    aggregate = batch_evaluate(args.directory, cfg, out_dir=out_dir,
                               jobs=args.jobs, emit_debug=args.emit_debug)
    print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                   for k, v in aggregate.items()))
    if aggregate["converged_frac"] < 1.0:
        print("warning: some solves stopped before reaching tolerance",
              file=sys.stderr)
    return EXIT_OK


def _cmd_phantom(args) -> int:
    spec_path = Path(args.spec)
    spec = parse_phantom_text(spec_path.read_text())
    image, mask = generate_phantom(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_gray(out_dir / f"{spec_path.stem}.png", image.pixels)
    write_mask(out_dir / f"{spec_path.stem}_GT.png", mask.pixels)
    print(f"wrote {spec_path.stem}.png and {spec_path.stem}_GT.png in {out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, (ImageIOError, ImageFormatError, OSError)):
            return EXIT_IO
        return EXIT_PIPELINE
    except (PhantomSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageIOError, ImageFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
