"""Named finite-difference gradient checks over the repo's differentiable ops.

Isolated ops are held to 1e-6, full-pipeline compositions to 1e-4.  Large
parameter sets are probed at a fixed random subset of coordinates so the
whole suite stays fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensorgrad as tg
from .generator import Generator, GeneratorConfig
from .geometry import positional_encode
from .synthscene.latents import mean_illumination
from .synthscene.shading import shade_blinn_phong
from .tensorgrad import Tensor, grad_check, param
from .tensorgrad import tensor as _tensor_module
from .volrender import composite_tensors

TOL_ISOLATED = 1e-6
TOL_PIPELINE = 1e-4


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


def _check_composite(rng, _overrides):
    r, k = 4, 5
    ts = param(np.sort(rng.uniform(1.2, 4.2, (r, k)), axis=1))
    cs = param(rng.uniform(0.2, 0.8, (r, k, 3)))
    sg = param(rng.uniform(0.1, 3.0, (r, k)))

    def f():
        c, a = composite_tensors(ts, cs, sg, t_far=4.6)
        return tg.tsum(c * c) + tg.tsum(a)

    return grad_check(f, [ts, cs, sg], h=1e-6)


def _check_shading(rng, _overrides):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    z_ill = param(np.array([0.3, 0.45, 1.0, 0.9, 0.8, 0.3, 0.25, 0.2]))
    albedo = param(np.array([0.5, 0.6, 0.7]))

    def f():
        rgb = shade_blinn_phong(Tensor(n), Tensor(v), None, z_ill, albedo,
                                k_s=0.3, clamp_output=False)
        return tg.tsum(rgb * rgb)

    return grad_check(f, [z_ill, albedo], h=1e-6)


def _check_encoder(rng, _overrides):
    v = param(rng.uniform(-0.8, 0.8, 3))

    def f():
        e = positional_encode(v, 4)
        return tg.tsum(e * e)

    return grad_check(f, [v], h=1e-6)


def _small_generator(overrides):
    cfg = GeneratorConfig(
        height=int(overrides.get("resolution", 8)),
        width=int(overrides.get("resolution", 8)),
        k_samples=int(overrides.get("k", 2)),
        id_dim=8, w_dim=8, mapping_depth=1,
        base_channels=16, min_channels=8, cond_channels=8,
        cond_hidden=8, spade_hidden=8, pe_freqs=2)
    return Generator(cfg, seed=3)


def _check_mapping(rng, overrides):
    gen = _small_generator(overrides)
    z = param(rng.standard_normal(gen.config.id_dim))
    names = [n for n in gen.param_names() if n.startswith("mapping.")]
    params = [gen.params()[n] for n in names] + [z]

    def f():
        w = gen.mapping_network(z)
        return tg.tsum(w * w)

    return grad_check(f, params, h=1e-6, coord_limit=6,
                      rng=np.random.default_rng(0))


def _check_condition(rng, overrides):
    gen = _small_generator(overrides)
    z_exp = param(rng.uniform(-0.8, 0.8, 20))
    z_cam = param(rng.uniform(-0.3, 0.3, 3))
    z_ill = param(mean_illumination())
    cond_params = [gen.params()[n] for n in gen.param_names() if n.startswith("cond.")]

    def f():
        c = gen.condition_maps(z_exp, z_cam, z_ill)
        return tg.tsum(c * c)

    return grad_check(f, [z_exp, z_cam, z_ill] + cond_params, h=1e-6,
                      coord_limit=6, rng=np.random.default_rng(1))


def _check_end_to_end(rng, overrides):
    gen = _small_generator(overrides)
    z_id = param(rng.standard_normal(gen.config.id_dim))
    z_exp = param(rng.uniform(-0.5, 0.5, 20))
    z_cam = param(rng.uniform(-0.2, 0.2, 3))
    z_ill = param(mean_illumination())
    target = rng.uniform(0.2, 0.8, (gen.config.height, gen.config.width, 3))
    params = gen.param_list() + [z_id, z_exp, z_cam, z_ill]

    def f():
        image, alpha, d_mu, _ = gen.forward(z_id, z_exp, z_cam, z_ill)
        diff = image - target
        return tg.tmean(diff * diff) + 0.1 * tg.tmean(alpha) + 0.01 * tg.tmean(d_mu)

    return grad_check(f, params, h=1e-5, coord_limit=3,
                      rng=np.random.default_rng(2))


CHECKS = [
    ("composite", TOL_ISOLATED, _check_composite),
    ("shading", TOL_ISOLATED, _check_shading),
    ("positional_encoding", TOL_ISOLATED, _check_encoder),
    ("mapping_network", TOL_ISOLATED, _check_mapping),
    ("condition_maps", TOL_ISOLATED, _check_condition),
    ("end_to_end_render_loss", TOL_PIPELINE, _check_end_to_end),
]


def run_gradient_suite(overrides: dict | None = None) -> list[CheckResult]:
    overrides = overrides or {}
    results = []
    for name, tol, fn in CHECKS:
        rng = np.random.default_rng(hash(name) % (2 ** 31))
        results.append(CheckResult(name, float(fn(rng, overrides)), tol))
    return results


FAULTABLE = ("exp", "sqrt", "sigmoid", "softplus")


def inject_fault(op_name: str):
    """Test fixture: replace one op's gradient rule with a broken one."""
    if op_name not in FAULTABLE:
        raise ValueError(f"cannot inject fault into {op_name!r}; "
                         f"choose one of {FAULTABLE}")
    forward = {"exp": np.exp, "sqrt": np.sqrt,
               "sigmoid": _tensor_module.expit,
               "softplus": lambda x: np.logaddexp(0.0, x)}[op_name]
    true_vjp = {"exp": lambda a, out, g: g * out,
                "sqrt": lambda a, out, g: g * 0.5 / out,
                "sigmoid": lambda a, out, g: g * out * (1.0 - out),
                "softplus": lambda a, out, g: g * _tensor_module.expit(a)}[op_name]

    def broken(a):
        if not isinstance(a, Tensor):
            return forward(a)
        out = forward(a.data)
        # gradient rule wrong by 1%
        return _tensor_module._apply(
            out, (a,), lambda g: (true_vjp(a.data, out, g) * 1.01,))

    setattr(tg, op_name, broken)
