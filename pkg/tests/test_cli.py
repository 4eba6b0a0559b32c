import json

import numpy as np
import pytest

from mkcdnm import cli, pipeline, synth
from mkcdnm.errors import InputError
from mkcdnm.kernels import save_kernel, save_labels


def run_cli(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def block_dataset(tmp_path):
    labels = np.repeat([0, 1], 6)
    K = (labels[:, None] == labels[None, :]).astype(float)
    for p in range(2):
        save_kernel(K, tmp_path / f"view_{p:02d}.mkck")
    save_labels(labels, tmp_path / "labels.txt")
    return tmp_path


def test_identical_block_kernels(block_dataset, capsys):
    code, out, _ = run_cli(["run", str(block_dataset), "--k", "2", "--preprocess", "normalize",
                            "--restarts", "5"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["d"] == [2, 2]
    assert rep["result"]["metrics"]["best"]["acc"] == 1.0
    code, out, _ = run_cli(["run", str(block_dataset), "--k", "2", "--mode", "akkm",
                            "--preprocess", "normalize", "--restarts", "5"], capsys)
    assert json.loads(out)["result"]["metrics"]["best"]["acc"] == 1.0


def test_block_kernels_lose_rank_when_centered(block_dataset, capsys):
    # centering a 2-block kernel leaves rank 1 < k
    code, _, err = run_cli(["run", str(block_dataset), "--k", "2"], capsys)
    assert code == 3
    assert "[optimize]" in err and "rank 1 < k=2" in err


def test_zero_noise_synth_both_modes_perfect(tmp_path, capsys):
    run_cli(["synth", str(tmp_path), "--profile", "clean", "--n", "40", "--k", "4", "--m", "3"], capsys)
    for mode in ("dnm", "akkm", "kkm-per-view"):
        code, out, _ = run_cli(["run", str(tmp_path), "--k", "4", "--mode", mode, "--restarts", "10"],
                               capsys)
        assert code == 0
        res = json.loads(out)["result"]
        if mode == "kkm-per-view":
            assert all(v["metrics"]["best"]["acc"] == 1.0 for v in res["views"])
        else:
            assert res["metrics"]["best"]["acc"] == 1.0
        if mode == "dnm":
            assert res["d"] == [4, 4, 4]


def test_report_is_byte_reproducible(tmp_path, capsys):
    run_cli(["synth", str(tmp_path / "ds"), "--profile", "rbf-blobs", "--n", "60", "--k", "3",
             "--m", "2"], capsys)
    outs = []
    for name in ("a.json", "b.json"):
        code, _, _ = run_cli(["run", str(tmp_path / "ds"), "--k", "3", "--restarts", "8",
                              "--no-timings", "--threads", "2", "-o", str(tmp_path / name)], capsys)
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert "timings" not in rep


def test_report_floats_round_trip(tmp_path, capsys):
    run_cli(["synth", str(tmp_path), "--profile", "clean", "--n", "24", "--k", "3"], capsys)
    code, out, _ = run_cli(["run", str(tmp_path), "--k", "3", "--restarts", "3"], capsys)
    rep = json.loads(out)
    assert set(rep["timings"]) >= {"load", "preprocess", "eig", "optimize", "consensus"}
    assert pipeline.dumps(json.loads(pipeline.dumps(rep))) == pipeline.dumps(rep)
    x = 0.1 + 0.2
    assert json.loads(pipeline.dumps({"x": x}))["x"] == x


def test_decompose_report(tmp_path, capsys):
    run_cli(["synth", str(tmp_path), "--profile", "denoise-ladder", "--n", "60", "--k", "3",
             "--m", "2"], capsys)
    code, out, _ = run_cli(["decompose", str(tmp_path), "--k", "3", "--features", "rank",
                            "--heatmaps", "--restarts", "10"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["reference"] == "labels"
    for v in res["views"]:
        assert v["lemma1_residual"] <= 1e-8 and v["lemma2_residual"] <= 1e-8
        assert v["min_eig_N"] >= -1e-8 and v["max_eig_C"] <= 1e-8
        assert abs(v["tr_E"] - v["tr_N"] - v["tr_C"]) <= 1e-8
        assert len(v["heatmaps"]["E_N"]) == 60
    assert res["d"] == [3, 9]
    assert res["trace_identity_residual"] <= 1e-8
    assert set(res["denoise"]) == {"none", "remove_N", "remove_C", "remove_both"}
    code, out, _ = run_cli(["decompose", str(tmp_path), "--k", "3", "--reference", "consensus",
                            "--features", "rank", "--restarts", "5"], capsys)
    assert json.loads(out)["result"]["reference"] == "consensus"


def test_curves(tmp_path, capsys):
    run_cli(["synth", str(tmp_path), "--profile", "rbf-blobs", "--n", "60", "--k", "3", "--m", "2"],
            capsys)
    code, out, _ = run_cli(["run", str(tmp_path), "--k", "3", "--restarts", "3", "--curves"], capsys)
    res = json.loads(out)["result"]
    assert len(res["curves"]) == res["optimizer"]["sweeps"]
    assert {"acc", "nmi", "purity", "ari", "d"} <= set(res["curves"][0])


def test_synth_mode_runs_both_methods(tmp_path, capsys):
    code, out, _ = run_cli(["run", str(tmp_path), "--k", "3", "--mode", "synth", "--n", "60",
                            "--m", "2", "--restarts", "5", "--seed", "2"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert {"dnm", "akkm", "spec"} <= set(res)
    assert (tmp_path / "manifest.json").exists()


def test_metrics_subcommand(tmp_path, capsys):
    save_labels(np.array([0, 0, 1, 1, 2, 2]), tmp_path / "pred.txt")
    save_labels(np.array([0, 0, 0, 1, 1, 1]), tmp_path / "truth.txt")
    code, out, _ = run_cli(["metrics", str(tmp_path / "pred.txt"), str(tmp_path / "truth.txt")], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["acc"] == 4 / 6 and rep["purity"] == 5 / 6


def test_exit_codes(tmp_path, capsys):
    code, _, err = run_cli(["run", str(tmp_path / "missing"), "--k", "2"], capsys)
    assert code == 2 and "load" in err
    # two views whose leading subspaces are orthogonal cannot be aligned
    E = np.eye(8)
    save_kernel(E[:, :3] @ E[:, :3].T, tmp_path / "view_00.mkck")
    save_kernel(E[:, 3:6] @ E[:, 3:6].T, tmp_path / "view_01.mkck")
    code, _, err = run_cli(["run", str(tmp_path), "--k", "2", "--preprocess", "none"], capsys)
    assert code == 4 and "optimize" in err
    (tmp_path / "view_02.mkck").write_bytes(b"junk")
    code, _, err = run_cli(["run", str(tmp_path), "--k", "2"], capsys)
    assert code == 2 and "view 2" in err


def test_view_count_mismatch_and_bad_config(tmp_path):
    save_kernel(np.eye(4), tmp_path / "view_00.mkck")
    save_kernel(np.eye(5), tmp_path / "view_01.mkck")
    with pytest.raises(InputError):
        pipeline.run_pipeline(pipeline.RunConfig(str(tmp_path), k=2))
    with pytest.raises(InputError):
        pipeline.RunConfig(str(tmp_path), k=1).validate()
    with pytest.raises(InputError):
        pipeline.RunConfig(str(tmp_path), k=2, mode="fast").validate()


def test_labels_optional(tmp_path):
    synth.generate_synthetic(synth.profile_spec("clean", 20, 2, 2), tmp_path)
    (tmp_path / "labels.txt").unlink()
    rep = pipeline.run_pipeline(pipeline.RunConfig(str(tmp_path), k=2, restarts=3))
    assert rep["result"]["metrics"] is None
    assert rep["result"]["d"] == [2, 2]
