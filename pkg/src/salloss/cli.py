"""Command-line interface: ``salloss <command> ...``.

Exit codes: 0 success, 1 check failure, 2 usage, 3 I/O, 4 numeric divergence.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .bench import BENCH_CONFIG, CSV_HEADER, run_bench
from .combination import LossCombination, center_bias_from_maps, combine, load_spec, preset
from .core import DegenerateInput, SaliencyError
from .metrics import METRIC_NAMES, EvalConfig, evaluate_all
from .micronet import MicroNet, Sample, train_micro
from .optimize import OptimizationDiverged, OptimizeConfig, gradcheck, optimize_map

log = logging.getLogger("salloss")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def resolve_spec(text: str) -> LossCombination:
    """A combination spec file path, or a preset name."""
    p = Path(text)
    if p.is_file():
        return load_spec(p)
    try:
        return preset(text)
    except SaliencyError:
        raise UsageError(f"{text!r} is neither a spec file nor a known preset") from None


def _load_inputs(args, need_pred=True):
    gt = fileio.load_map(args.gt)
    pred = fileio.load_map(args.pred) if need_pred else None
    fix = fileio.load_fixations(args.fix, (gt.shape[1], gt.shape[0])) if args.fix else None
    return gt, pred, fix


def _bind_center_bias(spec: LossCombination, args) -> LossCombination:
    if not spec.needs_center_bias:
        return spec
    if not getattr(args, "center_bias", None):
        raise UsageError("this combination has a center-bias term; pass --center-bias MAP")
    return spec.with_center_bias(fileio.load_map(args.center_bias))


def cmd_loss(args) -> int:
    spec = resolve_spec(args.spec)
    gt, pred, fix = _load_inputs(args)
    spec = _bind_center_bias(spec, args)
    res = combine(spec, gt, pred, fix)
    print(repr(res.value))
    if args.grad:
        g = res.gradient
        print(f"grad_l2 {float(np.sqrt(np.sum(g * g)))!r}")
        print(f"grad_max_abs {float(np.abs(g).max())!r}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    spec = _bind_center_bias(resolve_spec(args.spec), args)
    gt, pred, fix = _load_inputs(args)
    report = gradcheck(spec, gt, pred, fix, h=args.h)
    ok = report.passed(args.tol)
    print(f"max_rel_error {report.max_rel_error!r}")
    print(f"skipped {report.n_skipped}")
    print(f"tolerance {args.tol!r}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK


def smooth(m: np.ndarray) -> np.ndarray:
    """5x5 Gaussian blur with sigma 1."""
    from scipy.ndimage import gaussian_filter

    return gaussian_filter(m, sigma=1.0, truncate=2.0, mode="nearest")


def _opt_config(args) -> OptimizeConfig:
    return OptimizeConfig(
        step=args.step,
        iterations=args.iters,
        projection=args.projection,
        seed=args.seed,
        adaptive=args.adaptive,
    )


def cmd_optimize(args) -> int:
    spec = _bind_center_bias(resolve_spec(args.spec), args)
    gt, _, fix = _load_inputs(args, need_pred=False)
    result = optimize_map(spec, gt, fix, _opt_config(args))
    out = smooth(result.map) if args.smooth else result.map
    fileio.save_map(args.output, out)
    curve = args.curve or str(Path(args.output).with_suffix(".curve.csv"))
    fileio.write_curve(curve, result.trace)
    print(f"iterations {result.iterations}")
    print(f"final_loss {result.trace[-1]!r}")
    return EXIT_OK


def _dataset(root):
    entries = fileio.scan_dataset(root)
    return entries, [e.load() for e in entries]


def cmd_train(args) -> int:
    spec = resolve_spec(args.spec)
    entries, loaded = _dataset(args.data)
    if any(stim is None for _, _, stim in loaded):
        raise UsageError("training needs stimuli/<id> inputs for every entry")
    if spec.needs_center_bias:
        spec = spec.with_center_bias(center_bias_from_maps([gt for gt, _, _ in loaded]))
    samples = [Sample(stim, gt, fix) for gt, fix, stim in loaded]
    net, curve = train_micro(MicroNet.seeded(args.seed), samples, spec, args.epochs, args.step)
    out = Path(args.output)
    net.save(out)
    fileio.write_curve(args.curve or out.with_suffix(".curve.csv"), curve)
    print(f"epochs {len(curve)}")
    if curve:
        print(f"final_loss {curve[-1]!r}")
    return EXIT_OK


def _report_row(ident, report):
    return [ident] + [repr(v) for v in report.values().values()] + [report.flag_string()]


def cmd_eval(args) -> int:
    gt, pred, fix = _load_inputs(args)
    report = evaluate_all(gt, pred, fix, EvalConfig(args.splits, args.seed, args.emd_limit))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["id"] + list(METRIC_NAMES) + ["flags"])
    w.writerow(_report_row(args.id or Path(args.pred).stem, report))
    return EXIT_OK


def cmd_bench(args) -> int:
    _, loaded = _dataset(args.data)
    presets = [p.strip() for p in args.presets.split(",") if p.strip()]
    for name in presets:
        try:
            preset(name)
        except SaliencyError:
            raise UsageError(f"unknown preset {name!r}") from None
    cfg = OptimizeConfig(step=args.step, iterations=args.iters, projection=args.projection, seed=args.seed)
    rows = run_bench(
        [(gt, fix) for gt, fix, _ in loaded],
        presets,
        cfg,
        EvalConfig(args.splits, args.seed, args.emd_limit),
        jobs=args.jobs,
    )
    fh = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.csv_fields())
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_center_bias(args) -> int:
    _, loaded = _dataset(args.data)
    fileio.save_map(args.output, center_bias_from_maps([gt for gt, _, _ in loaded]))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import blob_dataset

    samples = blob_dataset(args.n, seed=args.seed, shape=(args.size, args.size), n_fix=args.fixations)
    fileio.write_dataset(args.output, samples)
    print(f"wrote {len(samples)} entries to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="salloss", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def pair(sp, fix_required=False):
        sp.add_argument("--gt", required=True, help="ground-truth map (SALMAP1 or P2/P5)")
        sp.add_argument("--pred", required=True, help="predicted map")
        sp.add_argument("--fix", required=fix_required, help="fixations (CSV x,y or graymap)")

    def opt_args(sp):
        sp.add_argument("--step", type=float, default=BENCH_CONFIG.step)
        sp.add_argument("--iters", type=int, default=BENCH_CONFIG.iterations)
        sp.add_argument("--projection", choices=("clamp", "renormalize", "none"), default="clamp")
        sp.add_argument("--seed", type=int, default=1)

    def eval_args(sp):
        sp.add_argument("--splits", type=int, default=100, help="AUC-Borji random splits")
        sp.add_argument("--emd-limit", type=int, default=1024, help="largest grid solved exactly by EMD")

    sp = sub.add_parser("loss", help="evaluate a loss combination")
    sp.add_argument("spec")
    pair(sp)
    sp.add_argument("--grad", action="store_true", help="also print gradient statistics")
    sp.add_argument("--center-bias")
    sp.set_defaults(func=cmd_loss)

    sp = sub.add_parser("gradcheck", help="finite-difference check of a combination's gradient")
    sp.add_argument("spec")
    pair(sp)
    sp.add_argument("--h", type=float, default=1e-5)
    sp.add_argument("--tol", type=float, default=1e-5)
    sp.add_argument("--center-bias")
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("optimize", help="direct-map optimisation of a combination")
    sp.add_argument("spec")
    sp.add_argument("--gt", required=True)
    sp.add_argument("--fix")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--curve", help="loss curve CSV (default: <output>.curve.csv)")
    sp.add_argument("--adaptive", action="store_true", help="double the step after each accepted move")
    sp.add_argument("--smooth", action="store_true", help="5x5 Gaussian (sigma 1) post-smoothing")
    sp.add_argument("--center-bias")
    opt_args(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("train", help="train the micro net on a dataset directory")
    sp.add_argument("--data", required=True)
    sp.add_argument("--spec", required=True)
    sp.add_argument("-o", "--output", default="micronet.npz")
    sp.add_argument("--curve")
    sp.add_argument("--epochs", type=int, default=200)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=1)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="seven-metric report for one prediction")
    pair(sp, fix_required=True)
    sp.add_argument("--id")
    sp.add_argument("--seed", type=int, default=1)
    eval_args(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bench", help="mean metrics per preset after direct-map optimisation")
    sp.add_argument("--data", required=True)
    sp.add_argument("--presets", default="MSE,LC2", help="comma-separated preset names")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("-o", "--output")
    opt_args(sp)
    eval_args(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("center-bias", help="mean ground-truth map of a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_center_bias)

    sp = sub.add_parser("synth", help="write a synthetic Gaussian-blob dataset")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--size", type=int, default=16)
    sp.add_argument("--fixations", type=int, default=5)
    sp.add_argument("--seed", type=int, default=1)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"salloss: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, fileio.FormatError) as e:
        print(f"salloss: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (OptimizationDiverged, DegenerateInput, FloatingPointError) as e:
        print(f"salloss: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except SaliencyError as e:
        print(f"salloss: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
