import numpy as np
import pytest

from salloss import fileio
from salloss.cli import main
from salloss.combination import format_spec, preset
from salloss.synthetic import blob_dataset

PRESETS = __import__("pathlib").Path(__file__).resolve().parents[1] / "presets"


@pytest.fixture
def maps(tmp_path, rng):
    gt = rng.uniform(0.05, 1.0, (8, 8))
    pred = rng.uniform(0.05, 1.0, (8, 8))
    fileio.save_map(tmp_path / "gt.salmap", gt)
    fileio.save_map(tmp_path / "pred.salmap", pred)
    r, c = np.unravel_index(np.argmax(gt), gt.shape)
    (tmp_path / "fix.csv").write_text(f"{c},{r}\n0,0\n")
    return tmp_path, gt, pred


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_loss_of_identical_maps_is_zero(maps, capsys):
    d, _, _ = maps
    code, out, _ = run(capsys, "loss", PRESETS / "mse.spec", "--gt", d / "gt.salmap", "--pred", d / "gt.salmap")
    assert code == 0 and out.strip() == "0.0"


def test_loss_by_preset_name_with_gradient(maps, capsys):
    d, gt, pred = maps
    code, out, _ = run(capsys, "loss", "LC1", "--gt", d / "gt.salmap", "--pred", d / "pred.salmap",
                       "--fix", d / "fix.csv", "--grad")
    assert code == 0
    lines = out.split()
    assert lines[1] == "grad_l2" and lines[3] == "grad_max_abs"


def test_gradcheck_exit_codes(maps, capsys):
    d, _, _ = maps
    base = ["--gt", d / "gt.salmap", "--pred", d / "pred.salmap", "--fix", d / "fix.csv"]
    code, out, _ = run(capsys, "gradcheck", "LC1", *base)
    assert code == 0 and out.strip().endswith("PASS")
    code, out, _ = run(capsys, "gradcheck", "LC1", *base, "--tol", "1e-30")
    assert code == 1 and out.strip().endswith("FAIL")


def test_center_bias_required(maps, capsys, tmp_path):
    d, _, _ = maps
    args = ["loss", "LC1_R", "--gt", d / "gt.salmap", "--pred", d / "pred.salmap", "--fix", d / "fix.csv"]
    assert run(capsys, *args)[0] == 2
    assert run(capsys, *args, "--center-bias", d / "gt.salmap")[0] == 0


def test_usage_and_io_errors(maps, capsys):
    d, _, _ = maps
    assert run(capsys)[0] == 2
    assert run(capsys, "loss", "NOT_A_PRESET", "--gt", d / "gt.salmap", "--pred", d / "gt.salmap")[0] == 2
    assert run(capsys, "loss", "MSE", "--gt", d / "missing.salmap", "--pred", d / "gt.salmap")[0] == 3
    (d / "junk.salmap").write_bytes(b"SALMAP1\0\1\0\0\0")
    assert run(capsys, "loss", "MSE", "--gt", d / "junk.salmap", "--pred", d / "gt.salmap")[0] == 3
    fileio.save_map(d / "small.salmap", np.ones((2, 2)))
    assert run(capsys, "loss", "MSE", "--gt", d / "small.salmap", "--pred", d / "gt.salmap")[0] == 2


def test_numeric_failure_exit_code(maps, capsys):
    d, _, _ = maps
    fileio.save_map(d / "flat.salmap", np.full((8, 8), 0.5))
    code, _, err = run(capsys, "loss", "CC", "--gt", d / "gt.salmap", "--pred", d / "flat.salmap")
    assert code == 4 and "numeric" in err


def test_eval_identical_maps(maps, capsys):
    d, _, _ = maps
    code, out, _ = run(capsys, "eval", "--gt", d / "gt.salmap", "--pred", d / "gt.salmap", "--fix", d / "fix.csv")
    header, row = out.strip().splitlines()
    assert header == "id,cc,sim,auc_judd,auc_borji,nss,emd,kl,flags"
    fields = row.split(",")
    assert fields[0] == "gt" and float(fields[1]) == pytest.approx(1.0, abs=1e-12)
    assert float(fields[2]) == pytest.approx(1.0) and float(fields[6]) == 0.0 and fields[-1] == "ok"


def test_optimize_writes_map_and_curve(maps, capsys):
    d, gt, _ = maps
    spec = d / "mse.spec"
    spec.write_text(format_spec(preset("MSE")))
    code, out, _ = run(capsys, "optimize", spec, "--gt", d / "gt.salmap", "-o", d / "opt.salmap",
                       "--step", "32", "--iters", "100")
    assert code == 0
    assert np.abs(fileio.load_map(d / "opt.salmap") - gt).max() <= 1e-3
    curve = (d / "opt.curve.csv").read_text().splitlines()
    assert curve[0] == "iteration,loss" and len(curve) >= 3
    code, _, _ = run(capsys, "optimize", "MSE", "--gt", d / "gt.salmap", "-o", d / "s.pgm", "--smooth", "--iters", "3")
    assert code == 0 and fileio.load_map(d / "s.pgm").shape == gt.shape


def test_dataset_commands(tmp_path, capsys):
    data = tmp_path / "data"
    assert run(capsys, "synth", "-o", data, "--n", "3", "--size", "12")[0] == 0
    assert run(capsys, "center-bias", "--data", data, "-o", tmp_path / "b.salmap")[0] == 0
    samples = [fileio.load_map(p) for p in sorted((data / "maps").iterdir())]
    np.testing.assert_allclose(fileio.load_map(tmp_path / "b.salmap"), sum(samples) / 3, atol=1e-15)
    code, out, _ = run(capsys, "train", "--data", data, "--spec", "LC1", "--epochs", "3",
                       "-o", tmp_path / "net.npz")
    assert code == 0 and (tmp_path / "net.npz").exists() and (tmp_path / "net.curve.csv").exists()
    assert out.startswith("epochs 3")


def test_bench_is_deterministic(tmp_path, capsys):
    data = tmp_path / "data"
    fileio.write_dataset(data, blob_dataset(3, seed=4))
    args = ["bench", "--data", data, "--presets", "MSE,LC1", "--iters", "5", "--splits", "10"]
    code, first, _ = run(capsys, *args)
    assert code == 0
    lines = first.strip().splitlines()
    assert lines[0].startswith("preset,n,cc") and [l.split(",")[0] for l in lines[1:]] == ["MSE", "KLD + CC + NSS"]
    assert run(capsys, *args)[1] == first
    assert run(capsys, *args, "--jobs", "2")[1] == first
    assert run(capsys, "bench", "--data", data, "--presets", "BOGUS")[0] == 2
