"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line; the lines are repeated
in the pytest terminal summary.  Run directly with ``python
tests/test_acceptance.py`` for just the lines.
"""
import io
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from salloss import distribution as dist
from salloss import pixel
from salloss.bench import BENCH_CONFIG, run_bench
from salloss.cli import main as cli_main
from salloss.combination import LossCombination, Term, TERM_KINDS, combine, preset
from salloss.fileio import write_dataset
from salloss.synthetic import blob_dataset
from conftest import random_fixations, random_pair
from suites import (fixed_target, grad_suite, grad_tolerance, kld_recovery, metric_suite,
                    micro_experiment, mse_recovery, newton_residuals, nss_vs_mse)

RESULTS = []


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} | {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


def test_1_gradient_suite():
    t0 = time.perf_counter()
    worst, skipped = grad_suite(20, seed=101)
    elapsed = time.perf_counter() - t0
    bad = {k: v for k, v in worst.items() if v > grad_tolerance(k)}
    top = max(worst, key=worst.get)
    report(1, "gradient suite", not bad and elapsed <= 60.0,
           f"{len(worst)} specs x 20 instances, worst {top} {worst[top]:.2e}, "
           f"skipped {sum(skipped.values())} kink entries, {elapsed:.1f}s"
           + (f", over tolerance: {sorted(bad)}" if bad else ""))


def test_2_metric_oracles():
    t0 = time.perf_counter()
    worst = metric_suite(60, seed=202)
    elapsed = time.perf_counter() - t0
    ok = (worst["auc_judd"] == 0.0 and worst["auc_borji"] == 0.0 and worst["emd"] <= 1e-6
          and all(worst[m] <= 1e-12 for m in ("cc", "sim", "nss", "kl")) and elapsed <= 120.0)
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(2, "metric-oracle suite", ok, f"60 instances, max |diff|: {detail}, {elapsed:.1f}s")


def test_3_minimizer_identities():
    gt, _ = fixed_target()
    linf, res = mse_recovery(gt)
    positive = np.random.default_rng(303).uniform(0.05, 1.0, (16, 16))
    tv, _ = kld_recovery(positive)
    rng = np.random.default_rng(304)
    newton = max(max(newton_residuals(rng.random((8, 8)), rng.random((8, 8)), rng.random((8, 8))).values())
                 for _ in range(10))
    ok = linf <= 1e-3 and res.iterations <= 500 and tv <= 1e-3 and newton <= 1e-10
    report(3, "minimizer identities", ok,
           f"MSE L_inf {linf:.1e} in {res.iterations} iters, KLD TV {tv:.1e}, Newton residual {newton:.1e}")


def test_4_loss_choice_matters():
    gt, fix = fixed_target()
    sim_nss, sim_mse, _ = nss_vs_mse(gt, fix)
    gap = sim_mse - sim_nss
    samples = [(s.gt, s.fix) for s in blob_dataset(10, seed=1)]
    mse_row, lc2_row = run_bench(samples, ["MSE", "LC2"], BENCH_CONFIG)
    cc_mse, cc_lc2 = mse_row.means["cc"], lc2_row.means["cc"]
    others = [m for m in ("sim", "auc_judd", "auc_borji", "nss") if lc2_row.means[m] > mse_row.means[m]]
    others += [m for m in ("emd", "kl") if lc2_row.means[m] < mse_row.means[m]]
    report(4, "loss choice matters", abs(gap) >= 0.05 and cc_lc2 >= cc_mse,
           f"SIM(NSS opt) {sim_nss:.3f} vs SIM(MSE opt) {sim_mse:.3f}, gap {abs(gap):.3f} (need 0.05); "
           f"bench mean CC LC2 {cc_lc2:.4f} vs MSE {cc_mse:.5f} (need LC2 >= MSE); "
           f"LC2 better on {','.join(others) or 'none'}")


def test_5_linearity_and_presets():
    rng = np.random.default_rng(505)
    worst = 0.0
    for kind in TERM_KINDS:
        s, p = random_pair(rng)
        fix = random_fixations(rng, s.shape, 4)
        bias = rng.random(s.shape)
        a, b = rng.normal(), rng.normal()
        whole = combine(LossCombination((Term(kind, a + b),)).with_center_bias(bias), s, p, fix)
        parts = [combine(LossCombination((Term(kind, c),)).with_center_bias(bias), s, p, fix) for c in (a, b)]
        worst = max(worst, abs(whole.value - parts[0].value - parts[1].value),
                    float(np.abs(whole.gradient - parts[0].gradient - parts[1].gradient).max()))
    lc1 = [(t.kind, t.coeff) for t in preset("LC1").terms]
    s, p = random_pair(rng)
    wbce = abs(dist.wbce(s, p, dist.WbceParams(0.5)).value - 0.5 * dist.bce(s, p).value)
    w = pixel.mlnet_weights(np.array([1.0, 0.0]))
    ok = (worst <= 1e-12 and lc1 == [("kld", 10.0), ("cc", -2.0), ("nss", -1.0)]
          and wbce <= 1e-12 and w[0] == 10.0 and w[1] == 1 / 1.1)
    report(5, "linearity and preset fidelity", ok,
           f"linearity {worst:.1e} over {len(TERM_KINDS)} kinds, LC1 {lc1}, wbce gap {wbce:.1e}, "
           f"MLNET weights ({float(w[0])!r}, {float(w[1])!r})")


def test_6_micro_trainer():
    from salloss.micronet import MicroNet, PARAM_FD_STEP, param_gradcheck
    t0 = time.perf_counter()
    cc, _, curve = micro_experiment(epochs=200, step=0.1, seed=1)
    cc_again, _, curve_again = micro_experiment(epochs=200, step=0.1, seed=1)
    elapsed = time.perf_counter() - t0
    sample = blob_dataset(1, seed=5, shape=(8, 8))[0]
    net = MicroNet.seeded(1)
    reports = param_gradcheck(net, [sample], preset("LC1"))
    fd = max(r.max_rel_error for r in reports.values())
    skipped = sum(r.n_skipped for r in reports.values())
    narrow = max(r.max_rel_error for r in param_gradcheck(net, [sample], preset("LC1"), h=1e-5).values())
    same = cc == cc_again and curve == curve_again
    ok = cc >= 0.9 and same and fd <= 1e-4 and elapsed <= 300.0
    report(6, "micro-trainer", ok,
           f"held-out CC {cc:.4f} after {len(curve)} epochs (repeat identical: {same}), "
           f"parameter grad rel err {fd:.1e} at h={PARAM_FD_STEP:g} ({skipped} ReLU-crossing entries skipped; "
           f"{narrow:.1e} at h=1e-5), {elapsed:.1f}s")


def test_7_bench_determinism(tmp_path):
    write_dataset(tmp_path / "data", blob_dataset(10, seed=1))
    outs = []
    for run in range(2):
        out = tmp_path / f"bench{run}.csv"
        with redirect_stdout(io.StringIO()):
            code = cli_main(["bench", "--data", str(tmp_path / "data"), "--presets", "MSE,LC2",
                             "--iters", "20", "--seed", "1", "-o", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    report(7, "bench determinism", outs[0] == outs[1],
           f"two 10-image MSE,LC2 runs at 20 iterations, {len(outs[0])} bytes each, identical: {outs[0] == outs[1]}")


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path
    failed = 0
    for name, fn in sorted((n, f) for n, f in dict(globals()).items() if n.startswith("test_")):
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
