"""Desk-scale loss benchmark: optimise a free map per image under each preset, score it."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .combination import LossCombination, center_bias_from_maps, preset, preset_name
from .core import FixationSet
from .metrics import METRIC_NAMES, EvalConfig, MetricReport, evaluate_all
from .optimize import OptimizeConfig, optimize_map

BENCH_CONFIG = OptimizeConfig(step=1.0, iterations=200, projection="clamp", seed=1)


@dataclass(frozen=True)
class BenchRow:
    preset: str
    n: int
    means: dict[str, float]
    degenerate: int

    def csv_fields(self) -> list[str]:
        return [self.preset, str(self.n)] + [repr(self.means[m]) for m in METRIC_NAMES] + [str(self.degenerate)]


CSV_HEADER = ["preset", "n"] + list(METRIC_NAMES) + ["degenerate"]


def _run_one(args) -> MetricReport:
    spec, gt, fix, opt_cfg, eval_cfg = args
    result = optimize_map(spec, gt, fix, opt_cfg)
    return evaluate_all(gt, result.map, fix, eval_cfg)


def aggregate(name: str, reports: list[MetricReport]) -> BenchRow:
    means = {}
    for m in METRIC_NAMES:
        vals = [getattr(r, m) for r in reports if r.flags.get(m) in ("ok", "approximate")]
        means[m] = math.fsum(vals) / len(vals) if vals else math.nan
    degenerate = sum(1 for r in reports for v in r.flags.values() if v not in ("ok", "approximate"))
    return BenchRow(name, len(reports), means, degenerate)


def run_bench(
    samples: list[tuple[np.ndarray, FixationSet]],
    presets: list[str],
    opt_cfg: OptimizeConfig = BENCH_CONFIG,
    eval_cfg: EvalConfig = EvalConfig(),
    jobs: int = 1,
    center_bias: np.ndarray | None = None,
) -> list[BenchRow]:
    """One row of mean metrics per preset, in the order given.

    The center-bias map defaults to the mean of the ground-truth maps.
    """
    if center_bias is None:
        center_bias = center_bias_from_maps([gt for gt, _ in samples])
    rows = []
    for name in presets:
        spec: LossCombination = preset(name)
        if spec.needs_center_bias:
            spec = spec.with_center_bias(center_bias)
        tasks = [(spec, gt, fix, opt_cfg, eval_cfg) for gt, fix in samples]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                reports = list(pool.map(_run_one, tasks))
        else:
            reports = [_run_one(t) for t in tasks]
        rows.append(aggregate(preset_name(name), reports))
    return rows
