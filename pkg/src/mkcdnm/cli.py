"""Command line interface.

    mkcdnm run DATASET --k K [--mode dnm|akkm|kkm-per-view|decompose|synth]
    mkcdnm synth OUT_DIR --k K [--profile NAME | --manifest FILE]
    mkcdnm decompose DATASET --k K [--heatmaps]
    mkcdnm metrics PRED TRUTH

Exit codes: 0 success, 2 input error, 3 numeric error, 4 infeasible.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__, kernels, synth
from .errors import MKCError
from .metrics import evaluate
from .pipeline import MODES, RunConfig, dumps, run_pipeline, write_report


def _common(p, mode_flag=True):
    p.add_argument("dataset", help="directory with view_*.mkck|csv, labels.txt, manifest.json")
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=50, help="k-means restarts (default 50)")
    p.add_argument("--initial-m", type=float, default=0.5, dest="initial_M",
                   help="starting penalty weight (default 0.5)")
    p.add_argument("--max-outer-iters", type=int, default=200,
                   help="cap on penalty doublings (default 200)")
    p.add_argument("--threads", type=int, default=None,
                   help="workers for per-view preprocessing (default: all cores)")
    p.add_argument("--preprocess", choices=sorted(kernels.PREPROCESSORS), default=None,
                   help="kernel preprocessing (default: manifest value, else center-normalize)")
    p.add_argument("--output", "-o", default=None, help="report path (default stdout)")
    p.add_argument("--no-timings", action="store_true",
                   help="omit wall-clock timings so reports are byte-reproducible")
    if mode_flag:
        p.add_argument("--mode", choices=MODES, default="dnm")
    p.add_argument("--features", choices=("learned", "rank"), default="learned",
                   help="decompose: learned dimensions or full numerical rank")
    p.add_argument("--reference", choices=("auto", "labels", "consensus"), default="auto",
                   help="decompose: partition the noise is measured against")
    p.add_argument("--heatmaps", action="store_true", help="decompose: include dense noise matrices")
    p.add_argument("--curves", action="store_true",
                   help="dnm: metrics of the consensus after every sweep")


def build_parser():
    parser = argparse.ArgumentParser(prog="mkcdnm",
                                     description="Multiple kernel clustering by dual noise minimization.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cluster a dataset directory")
    _common(run)
    run.add_argument("--profile", default="rbf-blobs", help="mode=synth: generator profile")
    run.add_argument("--n", type=int, default=300, help="mode=synth: sample count")
    run.add_argument("--m", type=int, default=3, help="mode=synth: view count")

    dec = sub.add_parser("decompose", help="noise decomposition report")
    _common(dec, mode_flag=False)

    syn = sub.add_parser("synth", help="write a synthetic dataset")
    syn.add_argument("out_dir")
    syn.add_argument("--profile", choices=sorted(synth.PROFILES), default="clean")
    syn.add_argument("--n", type=int, default=120)
    syn.add_argument("--k", type=int, default=3)
    syn.add_argument("--m", type=int, default=2)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--format", choices=("mkck", "csv"), default="mkck")
    syn.add_argument("--manifest", default=None, help="replay an existing manifest instead")

    met = sub.add_parser("metrics", help="score a labels file against the truth")
    met.add_argument("pred")
    met.add_argument("truth")
    met.add_argument("--output", "-o", default=None)
    return parser


def _config(args, mode):
    cfg = RunConfig(dataset_dir=args.dataset, k=args.k, restarts=args.restarts, seed=args.seed,
                    initial_M=args.initial_M, max_outer_iters=args.max_outer_iters, mode=mode,
                    threads=args.threads, preprocess=args.preprocess, features=args.features,
                    reference=args.reference, heatmaps=args.heatmaps, curves=args.curves,
                    timings=not args.no_timings)
    if mode == "synth":
        cfg.synth = {"profile": args.profile, "n": args.n, "m": args.m}
    return cfg


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("run", "decompose"):
            mode = args.mode if args.command == "run" else "decompose"
            report = run_pipeline(_config(args, mode))
            _emit(write_report(report, args.output), args.output)
        elif args.command == "synth":
            if args.manifest:
                spec = synth.load_manifest(args.manifest)
            else:
                spec = synth.profile_spec(args.profile, args.n, args.k, args.m, args.seed)
            out = synth.generate_synthetic(spec, args.out_dir, args.format)
            sys.stdout.write(json.dumps({"dataset": str(out), "spec": spec.to_dict()}) + "\n")
        elif args.command == "metrics":
            report = evaluate(kernels.load_labels(args.pred), kernels.load_labels(args.truth))
            text = dumps(report.to_dict())
            if args.output and args.output != "-":
                with open(args.output, "w") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
    except MKCError as exc:
        print(f"mkcdnm: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
