import json
import os

import numpy as np
import pytest

import facerf.training as training
from facerf import tensorgrad as tg
from facerf.generator import GeneratorConfig
from facerf.synthscene.dataset import generate_dataset
from facerf.tensorgrad import Tape, backward, grad_check, param
from facerf.training import (
    TrainConfig,
    batch_indices,
    load_train_checkpoint,
    loss_depth,
    loss_opacity,
    loss_photometric,
    train,
)

TINY_GEN = dict(height=8, width=8, k_samples=2, id_dim=8, w_dim=8, mapping_depth=1,
                base_channels=16, min_channels=8, cond_channels=8, cond_hidden=8,
                spade_hidden=8, pe_freqs=2)


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data") / "ds"
    generate_dataset(2, 8, 8, seed=31, out_dir=d, id_dim=8)
    return str(d)


def strip_secs(metrics_path):
    out = []
    for line in open(metrics_path, encoding="utf-8"):
        rec = json.loads(line)
        rec.pop("secs")
        out.append(json.dumps(rec))
    return "\n".join(out)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def test_photometric_basics():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, (4, 4, 3))
    assert loss_photometric(param(img), img).item() == 0.0
    off = loss_photometric(param(img + 0.1), img)
    assert abs(off.item() - 0.01) < 1e-12


def test_photometric_mask_keeps_constant_offset():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 1, (4, 4, 3))
    mask = rng.uniform(0, 1, (4, 4)) > 0.5
    val = loss_photometric(param(img + 0.1), img, mask, fg_weight=2.0)
    assert abs(val.item() - 0.01) < 1e-12


def test_photometric_gradient_analytic():
    rng = np.random.default_rng(2)
    target = rng.uniform(0, 1, (3, 3, 3))
    pred = param(rng.uniform(0, 1, (3, 3, 3)))
    with Tape() as tape:
        loss = loss_photometric(pred, target)
    backward(tape, loss)
    np.testing.assert_allclose(pred.grad, 2.0 * (pred.data - target) / target.size,
                               atol=1e-15)
    err = grad_check(lambda: loss_photometric(pred, target), [pred], h=1e-6)
    assert err < 1e-8


def test_photometric_shape_mismatch():
    with pytest.raises(ValueError):
        loss_photometric(param(np.zeros((2, 2, 3))), np.zeros((3, 2, 3)))


def test_depth_loss_cases():
    d = np.full((4, 4), 2.0)
    mask = np.zeros((4, 4), dtype=bool)
    mask[1:3, 1:3] = True
    assert loss_depth(param(d), d, mask).item() == 0.0
    assert loss_depth(param(d), d, np.zeros((4, 4), bool)).item() == 0.0
    off = loss_depth(param(d + 0.25), d, mask)
    assert abs(off.item() - 0.0625) < 1e-12


def test_opacity_loss_cases():
    mask = np.zeros((4, 4))
    mask[:2] = 1.0
    exact = loss_opacity(param(mask.copy()), mask)
    assert exact.item() < 1e-4
    half = loss_opacity(param(np.full((4, 4), 0.5)), mask)
    assert abs(half.item() - np.log(2.0)) < 1e-12


def test_opacity_gradient_sign_on_foreground():
    mask = np.ones((2, 2))
    alpha = param(np.full((2, 2), 0.7))
    with Tape() as tape:
        loss = loss_opacity(alpha, mask)
    backward(tape, loss)
    assert (alpha.grad < 0).all()


# ---------------------------------------------------------------------------
# batch schedule
# ---------------------------------------------------------------------------

def test_batch_indices_pure_and_covering():
    a = [batch_indices(7, 10, 3, it) for it in range(20)]
    b = [batch_indices(7, 10, 3, it) for it in range(20)]
    assert a == b
    seen = set()
    for it in range(4):   # 12 draws cover one epoch of 10 + wrap
        seen.update(batch_indices(7, 10, 3, it))
    assert seen == set(range(10))


def test_batch_indices_wrap_consistency():
    flat = []
    for it in range(7):
        flat.extend(batch_indices(3, 5, 2, it))
    # each epoch of 5 is a permutation
    for e in range(2):
        assert sorted(flat[5 * e:5 * (e + 1)]) == list(range(5))


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------

def make_config(dataset, out_dir, iterations=6, **kw):
    base = dict(dataset=dataset, iterations=iterations, batch_size=2,
                lr=2e-3, seed=5, out_dir=str(out_dir),
                generator=dict(TINY_GEN))
    base.update(kw)
    return TrainConfig(**base)


def test_train_metrics_and_determinism(tiny_dataset, tmp_path):
    cfg_a = make_config(tiny_dataset, tmp_path / "a")
    ckpt_a, metrics_a = train(cfg_a)
    cfg_b = make_config(tiny_dataset, tmp_path / "b")
    ckpt_b, metrics_b = train(cfg_b)
    lines = open(metrics_a).read().strip().split("\n")
    assert len(lines) == 6
    rec = json.loads(lines[0])
    assert set(rec) == {"iter", "l_pht", "l_depth", "l_op", "psnr_val", "secs"}
    assert strip_secs(metrics_a) == strip_secs(metrics_b)
    assert open(ckpt_a, "rb").read() == open(ckpt_b, "rb").read()


def test_train_resume_reproduces_metrics(tiny_dataset, tmp_path):
    full = make_config(tiny_dataset, tmp_path / "full", iterations=8)
    _, metrics_full = train(full)
    part = make_config(tiny_dataset, tmp_path / "part", iterations=4,
                       checkpoint_every=4)
    train(part)
    resumed = make_config(tiny_dataset, tmp_path / "part", iterations=8)
    ckpt_r, metrics_r = train(resumed,
                              resume_from=str(tmp_path / "part" / "ckpt_000004.rfck"))
    full_lines = [json.loads(l) for l in open(metrics_full)]
    res_lines = [json.loads(l) for l in open(metrics_r)]
    for f, r in zip(full_lines[4:], res_lines[4:]):
        f.pop("secs"), r.pop("secs")
        assert f == r


def test_train_loss_decreases_on_overfit(tiny_dataset, tmp_path):
    cfg = make_config(tiny_dataset, tmp_path / "d", iterations=60, batch_size=1)
    _, metrics = train(cfg)
    lines = [json.loads(l) for l in open(metrics)]
    first = np.median([l["l_pht"] for l in lines[:10]])
    last = np.median([l["l_pht"] for l in lines[-10:]])
    assert last < first


def test_train_rejects_dim_mismatch(tiny_dataset, tmp_path):
    bad = dict(TINY_GEN, id_dim=16)
    cfg = TrainConfig(dataset=tiny_dataset, iterations=1, batch_size=1,
                      out_dir=str(tmp_path / "x"), generator=bad)
    with pytest.raises(ValueError):
        train(cfg)


def test_train_rejects_resolution_mismatch(tiny_dataset, tmp_path):
    bad = dict(TINY_GEN, height=16, width=16)
    cfg = TrainConfig(dataset=tiny_dataset, iterations=1, batch_size=1,
                      out_dir=str(tmp_path / "x"), generator=bad)
    with pytest.raises(ValueError):
        train(cfg)


def test_train_aborts_on_nonfinite_loss(tiny_dataset, tmp_path, monkeypatch):
    def poisoned(gen, sample, config):
        bad = tg.Tensor(np.inf)
        return bad, bad, bad, bad

    monkeypatch.setattr(training, "sample_losses", poisoned)
    cfg = make_config(tiny_dataset, tmp_path / "p", iterations=2)
    with pytest.raises(FloatingPointError):
        train(cfg)
    assert os.path.exists(tmp_path / "p" / "diagnostic.json")


def test_checkpoint_cadence_and_roundtrip(tiny_dataset, tmp_path):
    cfg = make_config(tiny_dataset, tmp_path / "c", iterations=4, checkpoint_every=2)
    ckpt, _ = train(cfg)
    assert os.path.exists(tmp_path / "c" / "ckpt_000002.rfck")
    assert os.path.exists(tmp_path / "c" / "ckpt_000004.rfck")
    gen, arrays, meta = load_train_checkpoint(ckpt)
    assert meta["iteration"] == 4
    from facerf.synthscene import sample_latents, sample_rng
    lat = sample_latents(sample_rng(1, 0), id_dim=8)
    a = gen.render(lat)
    gen2, _, _ = load_train_checkpoint(ckpt)
    b = gen2.render(lat)
    for x, y in zip(a, b):
        assert x.tobytes() == y.tobytes()
