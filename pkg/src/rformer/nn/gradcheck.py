from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Module


def grad_check(
    model: Module,
    loss_fn: Callable[[], float],
    backward_fn: Callable[[], None],
    eps: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``loss_fn`` runs a forward pass and returns the scalar loss;
    ``backward_fn`` runs forward+backward and leaves gradients in the
    parameters. Every scalar of every parameter is perturbed. The error for
    one entry is ``|a - n| / max(|a|, |n|, floor)``.
    """
    model.zero_grad()
    backward_fn()
    worst = 0.0
    for p in model.params():
        analytic = p.grad.copy()
        flat = p.value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_fn()
            flat[i] = orig - eps
            down = loss_fn()
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    model.zero_grad()
    return worst


def model_grad_check(model, x, y, task: str, eps: float = 1e-5) -> float:
    """:func:`grad_check` for a :class:`TokenTransformer`; requires float64 params."""
    from .layers import cross_entropy, mse

    if model.dtype != np.float64:
        raise ValueError("gradient checks need a float64 model")
    crit = cross_entropy if task == "classify" else mse

    def loss_fn():
        return crit(model.forward(x), y)[0]

    def backward_fn():
        model.loss_and_grad(x, y, task)

    return grad_check(model, loss_fn, backward_fn, eps=eps)
