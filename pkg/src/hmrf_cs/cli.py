"""Command-line entry point: ``hmrf-cs {segment,bench,eval,synth}``."""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import bench
from .core import CommonConfig
from .energy import EnergyParams, Neighborhood
from .evaluation import binarize_labels, mask_from_image, misclassification_error
from .image_model import (
    GrayImage,
    PGMError,
    class_statistics,
    labels_to_image,
    load_pgm,
    save_pgm,
)
from .variants import PRESETS, VARIANTS, VariantConfig, run


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmrf-cs",
        description="HMRF image segmentation with cuckoo-search variants.")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one PGM image")
    seg.add_argument("--image", required=True, help="input PGM (P2 or P5)")
    seg.add_argument("--out", required=True, help="output PGM for the label image")
    seg.add_argument("--variant", choices=VARIANTS, default="ics")
    seg.add_argument("--n", type=int, help="nest count (default: variant preset)")
    seg.add_argument("--ni", type=int, help="iterations (default: variant preset)")
    seg.add_argument("--temp", type=float, help="temperature (default: variant preset)")
    seg.add_argument("--b", type=float, default=1.0, help="clique weight B")
    seg.add_argument("--k", type=int, default=2, help="number of classes")
    seg.add_argument("--neighborhood", type=Neighborhood.parse, default=Neighborhood.EIGHT,
                     help="four_connected or eight_connected")
    seg.add_argument("--seed", type=int, default=0)
    seg.add_argument("--alpha", type=float, help="override the step scale (scs)")
    seg.add_argument("--pa", type=float, help="override the abandonment fraction (scs)")
    seg.add_argument("--binary", action="store_true",
                     help="k = 2 only: write the brighter class as 255 and the darker as 0")

    bn = sub.add_parser("bench", help="run a parameter sweep from a config file")
    bn.add_argument("--config", required=True, help="key=value experiment file")
    bn.add_argument("--jobs", type=int, default=None,
                    help=f"parallel rows (default: ${bench.JOBS_ENV} or 1)")
    bn.add_argument("--output-dir", help="override output_dir from the config")

    ev = sub.add_parser("eval", help="misclassification error of a binary segmentation")
    ev.add_argument("--gt", required=True, help="ground-truth PGM (0 = background)")
    ev.add_argument("--seg", required=True, help="segmentation PGM (0 = background)")
    ev.add_argument("--both-polarities", action="store_true",
                    help="also score the inverted segmentation and keep the smaller error")

    sy = sub.add_parser("synth", help="write a synthetic image/ground-truth dataset")
    sy.add_argument("--out", required=True, help="output directory")
    sy.add_argument("--count", type=int, default=25)
    sy.add_argument("--size", type=int, default=64)
    sy.add_argument("--means", type=_pair, default=(80.0, 170.0),
                    help="background,foreground means")
    sy.add_argument("--noise", type=float, default=20.0, help="Gaussian noise sigma")
    sy.add_argument("--seed", type=int, default=0)
    return parser


def cmd_segment(args) -> int:
    preset = PRESETS[args.variant]
    common = CommonConfig(
        n=args.n if args.n is not None else preset.n,
        ni=args.ni if args.ni is not None else preset.ni,
        seed=args.seed,
    )
    if args.alpha is not None:
        common.alpha = args.alpha
    if args.pa is not None:
        common.pa = args.pa
    temp = args.temp if args.temp is not None else preset.temperature
    vconfig = VariantConfig(args.variant, common)
    eparams = EnergyParams(args.b, temp, args.neighborhood)
    vconfig.validate()
    if args.binary and args.k != 2:
        raise ValueError("--binary needs --k 2")

    image = load_pgm(args.image)
    start = time.perf_counter()
    result = run(image, args.k, vconfig, eparams)
    duration = time.perf_counter() - start
    if args.binary:
        mask = binarize_labels(result.labels, class_statistics(image, result.labels))
        out = GrayImage(mask.bits.astype("uint8") * 255)
    else:
        out = labels_to_image(result.labels)
    save_pgm(out, args.out)
    print(json.dumps({
        "variant": args.variant,
        "mu_star": [float(v) for v in result.mu_star],
        "energy": result.energy,
        "duration_s": duration,
    }))
    return 0


def cmd_bench(args) -> int:
    cfg = bench.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    jobs = args.jobs if args.jobs is not None else bench.default_jobs()
    records = bench.run_experiment(cfg, jobs=jobs)
    paths = bench.write_results(records, cfg.output_dir)
    ok = sum(r.ok for r in records)
    for r in records:
        if not r.ok:
            print(f"row failed: {r.image_name} {r.variant}: {r.error}", file=sys.stderr)
    print(f"{ok}/{len(records)} rows succeeded; results in {paths['results'].parent}")
    return 0 if ok else 1


def cmd_eval(args) -> int:
    gt = mask_from_image(load_pgm(args.gt))
    seg = mask_from_image(load_pgm(args.seg))
    report = misclassification_error(gt, seg, args.both_polarities)
    if args.both_polarities:
        print(f"{report.me!r} polarity_flipped={str(report.polarity_flipped).lower()}")
    else:
        print(repr(report.me))
    return 0


def cmd_synth(args) -> int:
    names = bench.synth_dataset(args.out, args.count, args.size, args.means,
                                args.noise, args.seed)
    print(f"wrote {len(names)} image/ground-truth pairs to {args.out}")
    return 0


COMMANDS = {"segment": cmd_segment, "bench": cmd_bench, "eval": cmd_eval, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, PGMError, ValueError) as exc:
        print(f"hmrf-cs {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
