"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tape, Tensor, backward


def grad_check(f, params: list[Tensor], h: float = 1e-5, coord_limit=None, rng=None) -> float:
    """Max relative error between tape gradients of ``f()`` and central differences.

    ``f`` is a no-argument callable returning a scalar Tensor built from
    ``params``.  Error per coordinate is |g_ad - g_fd| / max(1, |g_ad| + |g_fd|).
    With ``coord_limit`` set, at most that many coordinates per parameter are
    probed (chosen by ``rng``); otherwise every coordinate is.
    """
    with Tape() as tape:
        loss = f()
    backward(tape, loss, params=params)
    ad_grads = [p.grad.copy() for p in params]

    def eval_f() -> float:
        out = f()
        val = float(out.data) if isinstance(out, Tensor) else float(out)
        if not np.isfinite(val):
            raise FloatingPointError("objective returned a non-finite value at a perturbed point")
        return val

    worst = 0.0
    for p, g_ad in zip(params, ad_grads):
        flat = p.data.reshape(-1)
        n = flat.size
        if coord_limit is not None and n > coord_limit:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(n, size=coord_limit, replace=False)
        else:
            coords = range(n)
        g_flat = g_ad.reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            f_plus = eval_f()
            flat[i] = orig - h
            f_minus = eval_f()
            flat[i] = orig
            g_fd = (f_plus - f_minus) / (2.0 * h)
            err = abs(g_flat[i] - g_fd) / max(1.0, abs(g_flat[i]) + abs(g_fd))
            if err > worst:
                worst = err
    return worst
