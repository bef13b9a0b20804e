from __future__ import annotations

import numpy as np

from .layers import Param


class Adam:
    """Bias-corrected Adam. ``step`` applies the update and zeroes gradients."""

    def __init__(self, params: list[Param], lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps

    def step(self):
        for p in self.params:
            p.step += 1
            p.m *= self.beta1
            p.m += (1 - self.beta1) * p.grad
            p.v *= self.beta2
            p.v += (1 - self.beta2) * p.grad * p.grad
            m_hat = p.m / (1 - self.beta1**p.step)
            v_hat = p.v / (1 - self.beta2**p.step)
            p.value -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.value.dtype)
            p.zero_grad()


def adam_step(params: list[Param], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    Adam(params, lr, beta1, beta2, eps).step()
