"""Command-line interface: estimate, simulate, evaluate, visualize.

Exit codes: 0 success, 2 input error, 3 solver divergence.
"""

import argparse
import csv
import os
import sys

import numpy as np

from .errors import DivergenceError, EvflowError
from .events import load_events
from .fileio import (read_flo, read_image, write_flo, write_image,
                     write_metrics_csv, write_rgb)
from .metrics import flow_metrics, psnr
from .pipeline import parse_config, run
from .simulate import SceneSpec, render_scene, save_dataset
from .viz import colorize_flow

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3


def _parse_pair(text, name):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{name} must be 'a,b', got {text!r}")
    return float(parts[0]), float(parts[1])


def cmd_estimate(args):
    image = read_image(args.image)
    cfg = parse_config(args.config)
    stream = load_events(args.events, width=image.shape[1], height=image.shape[0])
    result = run(image, stream, cfg)

    os.makedirs(args.out_dir, exist_ok=True)
    write_flo(result.flow, os.path.join(args.out_dir, "flow.flo"))
    write_rgb(colorize_flow(result.flow), os.path.join(args.out_dir, "flow.png"))
    write_image(result.latent, os.path.join(args.out_dir, "deblurred.png"))
    with open(os.path.join(args.out_dir, "energy_trace.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "stage", "energy"])
        for i, (stage, e) in enumerate(zip(result.stages, result.energy_trace)):
            writer.writerow([i, stage, repr(e)])
    print(f"wrote flow.flo, flow.png, deblurred.png, energy_trace.csv to {args.out_dir}")
    if result.diverged:
        print("warning: solver diverged; outputs are the best state found", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_simulate(args):
    velocity = _parse_pair(args.velocity, "--velocity")
    contrast = _parse_pair(args.contrast, "--contrast")
    affine = None
    if args.affine is not None:
        parts = [float(v) for v in args.affine.split(",")]
        if len(parts) != 4:
            raise ValueError("--affine must be 'a11,a12,a21,a22'")
        affine = tuple(parts)
    spec = SceneSpec(width=args.width, height=args.height, texture=args.texture,
                     velocity=velocity, affine=affine, duration=args.duration,
                     exposure_T=args.exposure, window_dt=args.window,
                     threshold=args.threshold, substeps=args.substeps,
                     cell=args.cell, feature_scale=args.feature_scale,
                     contrast=contrast, drop_prob=args.drop_prob,
                     jitter_std=args.jitter)
    scene = render_scene(spec, seed=args.seed)
    save_dataset(scene, args.out)
    print(f"wrote dataset with {len(scene.stream)} events to {args.out}")
    return EXIT_OK


def cmd_evaluate(args):
    est = read_flo(args.est)
    gt = read_flo(args.gt)
    m = flow_metrics(est, gt)
    psnr_db = float("nan")
    if args.est_image and args.gt_image:
        psnr_db = psnr(read_image(args.est_image), read_image(args.gt_image))
    print("aee,mse,fe,psnr")
    print(f"{m.aee!r},{m.mse!r},{m.fe!r},{psnr_db!r}")
    if args.out:
        write_metrics_csv(args.out, m.aee, m.mse, m.fe, psnr_db)
    return EXIT_OK


def cmd_visualize(args):
    flow = read_flo(args.flow)
    write_rgb(colorize_flow(flow, max_mag=args.max_mag), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="evflow",
                                     description="Joint optical flow and deblurring "
                                                 "from one frame plus events")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="run the joint estimation")
    p.add_argument("--image", required=True, help="grayscale PNG/PGM input frame")
    p.add_argument("--events", required=True, help="event text file (t x y p)")
    p.add_argument("--config", required=True, help="key = value pipeline config")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="render a synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--texture", default="checkerboard",
                   help="checkerboard, blobs, or an image path")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--velocity", default="2,0", help="vx,vy in px/s")
    p.add_argument("--affine", default=None, help="a11,a12,a21,a22 in 1/s")
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--exposure", type=float, default=0.0)
    p.add_argument("--window", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.22)
    p.add_argument("--substeps", type=int, default=17)
    p.add_argument("--cell", type=int, default=8)
    p.add_argument("--feature-scale", type=float, default=8.0)
    p.add_argument("--contrast", default="0.2,0.8")
    p.add_argument("--drop-prob", type=float, default=0.0)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="compare an estimated flow against ground truth")
    p.add_argument("--est", required=True, help="estimated .flo")
    p.add_argument("--gt", required=True, help="ground-truth .flo")
    p.add_argument("--est-image", default=None, help="deblurred image for PSNR")
    p.add_argument("--gt-image", default=None, help="sharp reference image for PSNR")
    p.add_argument("--out", default=None, help="optional metrics CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("visualize", help="colorize a .flo file")
    p.add_argument("--flow", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-mag", type=float, default=None)
    p.set_defaults(func=cmd_visualize)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (EvflowError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
