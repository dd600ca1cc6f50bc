"""Adam with bias correction, plus gradient checking against central
differences (the oracle the layer tests and acceptance suite rely on)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ParamStore, Tensor


@dataclass
class AdamState:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(store: ParamStore, grads: dict[str, np.ndarray],
              state: AdamState) -> None:
    """One in-place Adam update over every named parameter."""
    state.t += 1
    t = state.t
    for name, tensor in store.params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != tensor.data.shape:
            raise ValueError(f"gradient shape mismatch for '{name}'")
        m = state.m.setdefault(name, np.zeros_like(tensor.data))
        v = state.v.setdefault(name, np.zeros_like(tensor.data))
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        tensor.data = tensor.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def gradient_check(store: ParamStore, loss_fn: Callable[[], Tensor],
                   h: float = 1e-5, names: list[str] | None = None,
                   max_entries: int = 24, seed: int = 0) -> float:
    """Max relative error between backprop gradients and central differences.

    Checks a random subset of entries per parameter to stay fast; the loss
    function must be deterministic.
    """
    store.zero_grad()
    loss_fn().backward()
    analytic = store.gradients()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in (names or store.names()):
        tensor = store.params[name]
        flat = tensor.data.reshape(-1)
        idxs = np.arange(flat.size)
        if flat.size > max_entries:
            idxs = rng.choice(flat.size, size=max_entries, replace=False)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            up = float(loss_fn().data)
            flat[i] = orig - h
            down = float(loss_fn().data)
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            ana = float(analytic[name].reshape(-1)[i])
            # the floor keeps finite-difference noise on near-zero entries
            # from dominating the relative error
            denom = max(abs(numeric), abs(ana), 1e-6)
            worst = max(worst, abs(numeric - ana) / denom)
    return worst
