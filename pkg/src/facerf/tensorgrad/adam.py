"""Adam with bias correction, as a plain function plus a small wrapper class."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state: AdamState):
    """One Adam update applied in place to ``params``; returns (params, state)."""
    if state.lr <= 0:
        raise ValueError("lr must be positive")
    datas = [p.data if isinstance(p, Tensor) else p for p in params]
    if not state.m:
        state.m = [np.zeros_like(d) for d in datas]
        state.v = [np.zeros_like(d) for d in datas]
    if len(grads) != len(datas):
        raise ValueError("params/grads length mismatch")
    for d, g in zip(datas, grads):
        if g.shape != d.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {d.shape}")
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient in adam_step")

    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for i, (d, g) in enumerate(zip(datas, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        d -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


class Adam:
    """Convenience wrapper stepping a list of tensors from their ``.grad``.

    ``lr_mults`` scales the learning rate per parameter (e.g. a slow
    mapping network or a finetune phase running the weights 200x slower).
    """

    def __init__(self, params: list[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, lr_mults=None):
        self.params = list(params)
        self.lr = lr
        self.lr_mults = list(lr_mults) if lr_mults is not None else [1.0] * len(self.params)
        if len(self.lr_mults) != len(self.params):
            raise ValueError("lr_mults length mismatch")
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        self.state.m = [np.zeros_like(p.data) for p in self.params]
        self.state.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads=None):
        gs = grads if grads is not None else [p.grad for p in self.params]
        s = self.state
        for g, p in zip(gs, self.params):
            if g is None:
                raise ValueError("missing gradient for parameter")
            if g.shape != p.data.shape:
                raise ValueError("gradient/parameter shape mismatch")
            if not np.isfinite(g).all():
                raise FloatingPointError("non-finite gradient")
        s.step += 1
        bc1 = 1.0 - s.beta1 ** s.step
        bc2 = 1.0 - s.beta2 ** s.step
        for i, (p, g) in enumerate(zip(self.params, gs)):
            s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g
            s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g
            m_hat = s.m[i] / bc1
            v_hat = s.v[i] / bc2
            p.data -= self.lr * self.lr_mults[i] * m_hat / (np.sqrt(v_hat) + s.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
