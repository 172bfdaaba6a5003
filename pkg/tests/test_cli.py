import json
import os

import numpy as np
import pytest

from facerf.cli import main
from facerf.generator import Generator, GeneratorConfig
from facerf.synthscene import read_depth, read_png, sample_latents, sample_rng

TINY = GeneratorConfig(height=8, width=8, k_samples=2, id_dim=8, w_dim=8,
                       mapping_depth=1, base_channels=16, min_channels=8,
                       cond_channels=8, cond_hidden=8, spade_hidden=8, pe_freqs=2)


@pytest.fixture(scope="module")
def tiny_ckpt(tmp_path_factory):
    p = tmp_path_factory.mktemp("ckpt") / "gen.rfck"
    Generator(TINY, seed=6).save(p)
    return str(p)


@pytest.fixture(scope="module")
def latents_json(tmp_path_factory):
    p = tmp_path_factory.mktemp("lat") / "latents.json"
    lat = sample_latents(sample_rng(4, 0), id_dim=8)
    p.write_text(json.dumps(lat.to_dict()))
    return str(p)


def read_tree(root):
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = fh.read()
    return out


def test_dataset_empty_and_seeded(tmp_path):
    out = tmp_path / "d"
    assert main(["dataset", "--count", "0", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest == {"version": 1, "seed": 0, "width": 64, "height": 64,
                        "samples": []}


def test_dataset_same_seed_identical_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["dataset", "--count", "2", "--width", "8", "--height", "8",
            "--seed", "9"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--force"]) == 0
    assert read_tree(a) == read_tree(b)


def test_dataset_missing_out_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["dataset", "--count", "1"])
    assert exc.value.code == 2


def test_train_cli_and_metrics(tmp_path):
    ds = tmp_path / "ds"
    main(["dataset", "--count", "2", "--width", "8", "--height", "8",
          "--seed", "3", "--id-dim", "8", "--out", str(ds)])
    cfg = {"version": 1, "dataset": str(ds), "iterations": 3, "batch_size": 1,
           "seed": 1, "out_dir": str(tmp_path / "run"),
           "generator": TINY.to_dict()}
    cfg_path = tmp_path / "train.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(cfg_path)]) == 0
    lines = (tmp_path / "run" / "metrics.jsonl").read_text().strip().split("\n")
    assert len(lines) == 3


def test_train_cli_bad_dataset_exits_1(tmp_path):
    cfg = {"version": 1, "dataset": str(tmp_path / "nope"), "iterations": 1,
           "out_dir": str(tmp_path / "run"), "generator": TINY.to_dict()}
    cfg_path = tmp_path / "train.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(cfg_path)]) == 1


def test_render_roundtrip_and_depth(tmp_path, tiny_ckpt, latents_json):
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    depth = tmp_path / "d.rfd"
    assert main(["render", "--checkpoint", tiny_ckpt, "--latents", latents_json,
                 "--out", str(out1), "--depth", str(depth)]) == 0
    assert main(["render", "--checkpoint", tiny_ckpt, "--latents", latents_json,
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    d = read_depth(depth)
    assert d.shape == (8, 8)
    img = read_png(out1)
    assert img.shape == (8, 8, 3)


def test_fit_bundle_and_base_untouched(tmp_path, tiny_ckpt):
    gen = Generator.load(tiny_ckpt)
    target, *_ = gen.render(sample_latents(sample_rng(5, 0), id_dim=8))
    from facerf.synthscene import write_png
    tpath = tmp_path / "target.png"
    write_png(tpath, target)
    before = open(tiny_ckpt, "rb").read()
    out = tmp_path / "bundle"
    assert main(["fit", "--checkpoint", tiny_ckpt, "--target", str(tpath),
                 "--out", str(out), "--latent-steps", "3",
                 "--finetune-steps", "2", "--finetune"]) == 0
    assert open(tiny_ckpt, "rb").read() == before
    assert sorted(os.listdir(out)) == ["finetuned.rfck", "latents.json",
                                       "render.png", "trace.jsonl"]
    assert len((out / "trace.jsonl").read_text().strip().split("\n")) == 5


def test_fit_corrupt_target_no_partial_bundle(tmp_path, tiny_ckpt):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png at all")
    out = tmp_path / "bundle"
    assert main(["fit", "--checkpoint", tiny_ckpt, "--target", str(bad),
                 "--out", str(out)]) == 1
    assert not out.exists()


def test_bench_report_schema_and_counting(tmp_path):
    out = tmp_path / "report.json"
    assert main(["bench", "--scene", "0", "--resolution", "16",
                 "--samplers", "uniform:16,hierarchical:16+32,depth_guided:8",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["version"] == 1
    evals = [r["field_evals"] for r in report["rows"]]
    assert evals == sorted(evals)
    ref = [r for r in report["rows"] if r["reference"]]
    assert len(ref) == 1 and ref[0]["psnr_db"] == 99.0
    by_name = {r["sampler"]: r for r in report["rows"]}
    assert by_name["depth_guided:8"]["field_evals"] == 16 * 16 * 8
    assert by_name["hierarchical:16+32"]["field_evals"] == 16 * 16 * 48
    from facerf.bench_analysis import summarize_bench
    csv_text, series, flags = summarize_bench(report)
    assert csv_text.startswith("sampler,")


def test_bench_unknown_sampler_exits_1(tmp_path):
    assert main(["bench", "--samplers", "sobol:16",
                 "--out", str(tmp_path / "r.json")]) == 1


def test_gradcheck_cli_pass_and_fault(capsys):
    import time

    import facerf.tensorgrad as tg_pkg
    from facerf.tensorgrad import tensor as tensor_module
    t0 = time.time()
    assert main(["gradcheck"]) == 0
    assert time.time() - t0 < 10.0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6
    try:
        assert main(["gradcheck", "--inject-fault", "sqrt"]) == 1
        captured = capsys.readouterr()
        assert "FAIL" in captured.out
        assert "shading" in captured.err or "shading" in captured.out
    finally:
        tg_pkg.sqrt = tensor_module.sqrt   # undo the injected fault


def test_unknown_command_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
