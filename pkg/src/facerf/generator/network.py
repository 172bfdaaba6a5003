"""Style-based convolutional generator emitting all per-ray radiance samples
plus the depth Gaussian in one pass.

The identity code drives weight modulation (StyleGAN2 style, demodulated);
the scene parameters (expression, camera, illumination) reach the synthesis
stack only through SPADE scale/shift predicted from spatial condition maps.
Output layout per pixel: K * (r, g, b, sigma) raw channels, then the two
depth-distribution channels.
"""

from __future__ import annotations

import numpy as np

from .. import tensorgrad as tg
from ..config import DEFAULT, RenderConfig
from ..geometry import positional_encode
from ..synthscene.latents import SceneLatents
from ..synthscene.shading import light_direction
from ..tensorgrad import Tensor, load_checkpoint, save_checkpoint
from ..volrender import composite_tensors, gaussian_quantiles
from .config import GeneratorConfig

_GAIN = np.sqrt(2.0)


def _act(x):
    return tg.leaky_relu(x, 0.2) * _GAIN


class Generator:
    def __init__(self, config: GeneratorConfig | None = None, seed: int = 0,
                 render_cfg: RenderConfig = DEFAULT):
        self.config = config or GeneratorConfig()
        self.render_cfg = render_cfg
        self.seed = seed
        self._params: dict[str, Tensor] = {}
        self._build(np.random.default_rng(seed))
        assert self.config.out_channels == 4 * self.config.k_samples + 2

    # -- parameter plumbing -------------------------------------------------

    def _add(self, name: str, arr: np.ndarray) -> Tensor:
        t = Tensor(arr, requires_grad=True)
        self._params[name] = t
        return t

    def params(self) -> dict[str, Tensor]:
        return dict(self._params)

    def param_names(self) -> list[str]:
        return list(self._params)

    def param_list(self) -> list[Tensor]:
        return list(self._params.values())

    def lr_multipliers(self, mapping_mult: float = 0.01) -> list[float]:
        """Per-parameter lr multipliers (slow mapping network, standard style)."""
        return [mapping_mult if n.startswith("mapping.") else 1.0
                for n in self._params]

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {n: p.data.copy() for n, p in self._params.items()}

    def load_state(self, arrays: dict):
        for n, p in self._params.items():
            a = np.asarray(arrays[n], dtype=np.float64)
            if a.shape != p.data.shape:
                raise ValueError(f"shape mismatch for {n}: {a.shape} vs {p.data.shape}")
            p.data = a.copy()
            p.grad = None

    def _build(self, rng):
        cfg = self.config
        dim = cfg.id_dim
        for i in range(cfg.mapping_depth):
            out = cfg.w_dim
            self._add(f"mapping.{i}.weight", rng.standard_normal((out, dim)) / np.sqrt(dim))
            self._add(f"mapping.{i}.bias", np.zeros(out))
            dim = out

        self._add("seed.const", rng.standard_normal((cfg.base_channels, 4, 4)))

        lc = cfg.latent_cat_dim
        cin = cfg.cond_in_channels
        self._add("cond.affine1.weight", rng.standard_normal((cin, lc)) / np.sqrt(lc))
        self._add("cond.affine1.bias", np.ones(cin))
        self._add("cond.conv1.weight",
                  rng.standard_normal((cfg.cond_hidden, cin, 3, 3)) / np.sqrt(cin * 9))
        self._add("cond.conv1.bias", np.zeros(cfg.cond_hidden))
        self._add("cond.affine2.weight",
                  rng.standard_normal((cfg.cond_hidden, lc)) / np.sqrt(lc))
        self._add("cond.affine2.bias", np.ones(cfg.cond_hidden))
        self._add("cond.conv2.weight",
                  rng.standard_normal((cfg.cond_channels, cfg.cond_hidden, 3, 3))
                  / np.sqrt(cfg.cond_hidden * 9))
        self._add("cond.conv2.bias", np.zeros(cfg.cond_channels))

        for b in range(cfg.n_blocks):
            cin = cfg.channels_at(b)
            cout = cfg.channels_at(b + 1)
            self._add(f"block{b}.affine.weight",
                      rng.standard_normal((cin, cfg.w_dim)) / np.sqrt(cfg.w_dim))
            self._add(f"block{b}.affine.bias", np.ones(cin))
            self._add(f"block{b}.conv.weight",
                      rng.standard_normal((cout, cin, 3, 3)) / np.sqrt(cin * 9))
            self._add(f"block{b}.conv.bias", np.zeros(cout))
            self._add(f"block{b}.spade.shared.weight",
                      rng.standard_normal((cfg.spade_hidden, cfg.cond_channels, 3, 3))
                      / np.sqrt(cfg.cond_channels * 9))
            self._add(f"block{b}.spade.shared.bias", np.zeros(cfg.spade_hidden))
            for head in ("gamma", "beta"):
                self._add(f"block{b}.spade.{head}.weight",
                          rng.standard_normal((cout, cfg.spade_hidden, 1, 1))
                          / np.sqrt(cfg.spade_hidden))
                self._add(f"block{b}.spade.{head}.bias", np.zeros(cout))

        last = cfg.channels_at(cfg.n_blocks)
        self._add("out.weight",
                  rng.standard_normal((cfg.out_channels, last, 1, 1)) / np.sqrt(last))
        self._add("out.bias", np.zeros(cfg.out_channels))

    # -- forward pieces -----------------------------------------------------

    def mapping_network(self, z_id):
        """Normalized identity code through the mapping MLP -> w_ID."""
        cfg = self.config
        z = z_id if isinstance(z_id, Tensor) else Tensor(np.asarray(z_id, dtype=np.float64))
        if z.shape != (cfg.id_dim,):
            raise ValueError(f"z_id must have dim {cfg.id_dim}, got {z.shape}")
        norm = tg.sqrt(tg.tsum(z * z) + 1e-12)
        x = z / norm * np.sqrt(cfg.id_dim)
        for i in range(cfg.mapping_depth):
            w = self._params[f"mapping.{i}.weight"]
            b = self._params[f"mapping.{i}.bias"]
            x = _act(w @ x + b)
        return x

    def latent_vector(self, z_exp, z_cam, z_ill):
        """Scene-parameter concat: [z_exp, enc(z_cam), enc(light dir), intensities]."""
        light = light_direction(z_ill[0], z_ill[1])
        parts = [z_exp,
                 positional_encode(z_cam, self.config.pe_freqs),
                 positional_encode(light, self.config.pe_freqs),
                 z_ill[2:8]]
        return tg.concat(parts, axis=0)

    def _mod_conv(self, x, weight, bias, styles, demodulate=True):
        cout, cin = weight.shape[0], weight.shape[1]
        w = weight * tg.reshape(styles, (1, cin, 1, 1))
        if demodulate:
            denom = tg.sqrt(tg.tsum(w * w, axis=(1, 2, 3), keepdims=True) + 1e-8)
            w = w / denom
        return tg.conv2d(x, w) + tg.reshape(bias, (1, cout, 1, 1))

    def condition_maps(self, z_exp, z_cam, z_ill):
        """Two modulated convs over the spatially broadcast scene parameters.

        The broadcast grid carries two fixed coordinate channels so the
        convs can turn pose/light parameters into spatial patterns.  Returns
        the coarse 4x4 condition tensor; blocks consume it nearest-upsampled
        to their resolution.  Modulation here is an affine of the latent
        concat itself, independent of w_ID.
        """
        lat = self.latent_vector(z_exp, z_cam, z_ill)
        lat = lat if isinstance(lat, Tensor) else Tensor(lat)
        lc = self.config.latent_cat_dim
        if lat.shape != (lc,):
            raise ValueError(f"latent concat has dim {lat.shape}, expected {lc}")
        base = tg.reshape(lat, (1, lc, 1, 1)) * np.ones((1, 1, 4, 4))
        xs = np.linspace(-1.0, 1.0, 4)
        coords = np.stack(np.meshgrid(xs, xs, indexing="xy"))[None]
        base = tg.concat([base, Tensor(coords)], axis=1)
        s1 = self._params["cond.affine1.weight"] @ lat + self._params["cond.affine1.bias"]
        x = _act(self._mod_conv(base, self._params["cond.conv1.weight"],
                                self._params["cond.conv1.bias"], s1))
        s2 = self._params["cond.affine2.weight"] @ lat + self._params["cond.affine2.bias"]
        x = _act(self._mod_conv(x, self._params["cond.conv2.weight"],
                                self._params["cond.conv2.bias"], s2))
        return x

    def block_modulations(self, w_id):
        """Per-block modulation scalars; a function of w_ID alone."""
        return [self._params[f"block{b}.affine.weight"] @ w_id
                + self._params[f"block{b}.affine.bias"]
                for b in range(self.config.n_blocks)]

    def spade_scales(self, cond, block: int):
        """(gamma, beta) for one block; a function of the condition maps alone."""
        target = 4 * (2 ** (block + 1))
        c = cond
        res = c.shape[-1]
        while res < target:
            c = tg.upsample2(c)
            res *= 2
        shared = _act(tg.conv2d(c, self._params[f"block{block}.spade.shared.weight"])
                      + tg.reshape(self._params[f"block{block}.spade.shared.bias"],
                                   (1, -1, 1, 1)))
        gamma = tg.conv2d(shared, self._params[f"block{block}.spade.gamma.weight"]) \
            + tg.reshape(self._params[f"block{block}.spade.gamma.bias"], (1, -1, 1, 1))
        beta = tg.conv2d(shared, self._params[f"block{block}.spade.beta.weight"]) \
            + tg.reshape(self._params[f"block{block}.spade.beta.bias"], (1, -1, 1, 1))
        return gamma, beta

    @staticmethod
    def _instance_norm(x):
        m = tg.tmean(x, axis=(2, 3), keepdims=True)
        xc = x - m
        v = tg.tmean(xc * xc, axis=(2, 3), keepdims=True)
        return xc / tg.sqrt(v + 1e-8)

    def synthesize(self, w_id, cond, feature_stats: list | None = None):
        """Seed -> (upsample, modulated conv, SPADE, lrelu) blocks -> raw grid.

        ``feature_stats`` (when a list) collects each block's post-activation
        standard deviation, used by the initialization sanity checks.
        """
        x = tg.reshape(self._params["seed.const"],
                       (1,) + self._params["seed.const"].shape)
        mods = self.block_modulations(w_id)
        for b in range(self.config.n_blocks):
            x = tg.upsample2(x)
            x = self._mod_conv(x, self._params[f"block{b}.conv.weight"],
                               self._params[f"block{b}.conv.bias"], mods[b])
            gamma, beta = self.spade_scales(cond, b)
            x = self._instance_norm(x) * (1.0 + gamma) + beta
            x = _act(x)
            if feature_stats is not None:
                feature_stats.append(float(np.std(x.data)))
        grid = tg.conv2d(x, self._params["out.weight"]) \
            + tg.reshape(self._params["out.bias"], (1, -1, 1, 1))
        return grid

    def decode_outputs(self, grid):
        """Raw grid -> per-pixel sorted ray samples plus the depth Gaussian.

        Colors are logistic-squashed, densities softplus, D_mu squashed into
        [t_near, t_far], D_std floored; sample depths sit at the stratified
        Gaussian quantiles so channel k is the k-th quantile by construction.
        """
        cfg = self.config
        rc = self.render_cfg
        h, w, k = cfg.height, cfg.width, cfg.k_samples
        r = h * w
        samples = tg.reshape(grid[0, :4 * k], (k, 4, h, w))
        samples = tg.reshape(tg.transpose(samples, (2, 3, 0, 1)), (r, k, 4))
        colors = tg.sigmoid(samples[:, :, :3])
        sigmas = tg.softplus(samples[:, :, 3])
        d_mu = rc.t_near + tg.sigmoid(tg.reshape(grid[0, 4 * k], (r,))) \
            * (rc.t_far - rc.t_near)
        d_std = rc.std_floor + tg.softplus(tg.reshape(grid[0, 4 * k + 1], (r,)))
        q = gaussian_quantiles(k)
        depths = tg.clip(tg.reshape(d_mu, (r, 1)) + tg.reshape(d_std, (r, 1)) * q,
                         rc.t_near, rc.t_far)
        return depths, colors, sigmas, d_mu, d_std

    def forward(self, z_id, z_exp, z_cam, z_ill):
        """Full render: one generator evaluation per image (H*W*K field samples).

        Returns (image (H,W,3), alpha (H,W), d_mu (H,W), d_std (H,W)) tensors.
        """
        cfg = self.config
        rc = self.render_cfg
        h, w = cfg.height, cfg.width
        r = h * w
        w_id = self.mapping_network(z_id)
        cond = self.condition_maps(z_exp, z_cam, z_ill)
        grid = self.synthesize(w_id, cond)
        depths, colors, sigmas, d_mu, d_std = self.decode_outputs(grid)
        color, alpha = composite_tensors(depths, colors, sigmas, t_far=rc.t_far)
        image = color + (1.0 - tg.reshape(alpha, (r, 1))) * rc.background_rgb
        return (tg.reshape(image, (h, w, 3)), tg.reshape(alpha, (h, w)),
                tg.reshape(d_mu, (h, w)), tg.reshape(d_std, (h, w)))

    def forward_latents(self, latents: SceneLatents):
        return self.forward(latents.z_id, latents.z_exp, latents.z_cam, latents.z_ill)

    def render(self, latents: SceneLatents):
        """Evaluation-only render to plain arrays."""
        image, alpha, d_mu, d_std = self.forward_latents(latents)
        return image.data, alpha.data, d_mu.data, d_std.data

    def field_evals_per_image(self) -> int:
        return self.config.height * self.config.width * self.config.k_samples

    # -- checkpointing ------------------------------------------------------

    def save(self, path, extra_meta: dict | None = None):
        meta = {"kind": "generator", "seed": self.seed,
                "config": self.config.to_dict()}
        meta.update(extra_meta or {})
        save_checkpoint(path, self._params, meta)

    @classmethod
    def load(cls, path, render_cfg: RenderConfig = DEFAULT) -> "Generator":
        arrays, meta = load_checkpoint(path)
        gen = cls(GeneratorConfig.from_dict(meta["config"]),
                  seed=int(meta.get("seed", 0)), render_cfg=render_cfg)
        gen.load_state(arrays)
        return gen
