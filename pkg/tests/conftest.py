"""Session fixtures for the heavyweight acceptance criteria.

Training runs are shared across tests: criterion 6's paired ablation runs
and the fitting-fixture model (criterion 7, fitting invariants, the CLI
illumination sweep) are each trained once per session.
"""

import time

import numpy as np
import pytest

from facerf.generator import GeneratorConfig
from facerf.synthscene import generate_dataset
from facerf.training import TrainConfig, train

ABLATION_GEN = dict(height=32, width=32, k_samples=8, id_dim=32)

# fitting fixture: reduced latent redundancy (id_dim 32) and a wider net so
# pose/expression stay identifiable from photometric self-reconstruction
FIT_GEN = dict(height=32, width=32, k_samples=8, id_dim=32,
               base_channels=128, min_channels=32)
FIT_ITERATIONS = 6000
FIT_DATASET_COUNT = 256


@pytest.fixture(scope="session")
def ablation_runs(tmp_path_factory):
    """64-sample dataset plus paired 2000-iteration runs differing only in
    the depth-loss weight (criterion 6)."""
    root = tmp_path_factory.mktemp("ablation")
    ds = root / "ds64"
    generate_dataset(64, 32, 32, seed=11, out_dir=ds, id_dim=32)
    out = {"dataset": str(ds)}
    t0 = time.time()
    for tag, w_depth in (("with_depth", 1.0), ("no_depth", 0.0)):
        cfg = TrainConfig(dataset=str(ds), iterations=2000, batch_size=2,
                          lr=2e-3, seed=3, w_depth=w_depth, w_opacity=0.3,
                          photometric_fg_weight=2.0, out_dir=str(root / tag),
                          generator=dict(ABLATION_GEN))
        ckpt, metrics = train(cfg)
        out[tag] = ckpt
    out["train_seconds"] = time.time() - t0
    return out


@pytest.fixture(scope="session")
def fitted_model(tmp_path_factory):
    """The trained desk-scale model used by the fitting round-trip tests."""
    root = tmp_path_factory.mktemp("fitmodel")
    ds = root / "ds"
    generate_dataset(FIT_DATASET_COUNT, FIT_GEN["height"], FIT_GEN["width"],
                     seed=100, out_dir=ds, id_dim=FIT_GEN["id_dim"])
    cfg = TrainConfig(dataset=str(ds), iterations=FIT_ITERATIONS, batch_size=2,
                      lr=2e-3, seed=0, w_opacity=0.3, photometric_fg_weight=2.0,
                      out_dir=str(root / "run"), generator=dict(FIT_GEN))
    t0 = time.time()
    ckpt, _ = train(cfg)
    from facerf.training import load_train_checkpoint
    gen, _, _ = load_train_checkpoint(ckpt)
    return {"generator": gen, "checkpoint": ckpt,
            "train_seconds": time.time() - t0}


def _perturbed_init(lat, rng):
    """The self-reconstruction study's init: truth + 0.3*uniform noise on
    expression, camera, and illumination, clamped to the valid boxes."""
    from facerf.synthscene import SceneLatents
    from facerf.synthscene.latents import CAM_HIGH, CAM_LOW, ILL_HIGH, ILL_LOW

    def pert(v, lo, hi):
        return np.clip(v + 0.3 * rng.uniform(-1.0, 1.0, v.shape), lo, hi)

    return SceneLatents(
        lat.z_id.copy(),
        pert(lat.z_exp, -1.0, 1.0),
        pert(lat.z_cam, CAM_LOW, CAM_HIGH),
        pert(lat.z_ill, ILL_LOW, ILL_HIGH),
    )


@pytest.fixture(scope="session")
def perturbed_init():
    return _perturbed_init


@pytest.fixture(scope="session")
def fit_study(fitted_model):
    """20 self-reconstruction fits from perturbed inits on the trained model.

    Shared by acceptance criterion 7 and the fitting round-trip invariant.
    """
    from facerf.fitting import FitConfig, finetune_generator, fit_latents
    from facerf.synthscene import sample_latents, sample_rng
    from facerf.volrender import psnr

    gen = fitted_model["generator"]
    rng = np.random.default_rng(777)
    t0 = time.time()
    trials = []
    for trial in range(20):
        lat = sample_latents(sample_rng(555, trial), id_dim=gen.config.id_dim)
        target, *_ = gen.render(lat)
        init = _perturbed_init(lat, rng)
        cfg = FitConfig(latent_steps=500, finetune_steps=60, latent_lr=0.03,
                        w_prior=1e-3)
        res1 = fit_latents(gen, target, config=cfg, init=init)
        res2, _ = finetune_generator(gen, target, res1, config=cfg)
        trials.append({
            "psnr": psnr(res1.image, target),
            "cam_err": float(np.abs(res1.latents.z_cam - lat.z_cam).max()),
            "exp_rms": float(np.sqrt(np.mean((res1.latents.z_exp - lat.z_exp) ** 2))),
            "loss_ok": res2.best_loss <= res1.best_loss + 1e-15,
        })
    return {"trials": trials, "fit_seconds": time.time() - t0}
