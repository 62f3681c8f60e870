"""Finite-difference verification of the hand-derived gradients.

Runs in float64 with dropout disabled; training itself is float32, where
central differences would drown in rounding noise.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..representations import RepresentationStack
from ..rng import stream
from .config import CnnConfig
from .model import batch_loss, loss_and_grad
from .params import init_params


def _sample_indices(rng, size: int, count: int) -> list[int]:
    if size <= count:
        return list(range(size))
    chosen: set[int] = set()
    while len(chosen) < count:
        chosen.add(rng.randbelow(size))
    return sorted(chosen)


def gradcheck(config: CnnConfig, stack: RepresentationStack | None, batch,
              seed: int, h: float = 1e-5, samples_per_tensor: int = 20) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks at least `samples_per_tensor` coordinates of every trainable
    tensor (all of them for smaller tensors).  Relative error is
    |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
    """
    config = replace(config, dropout_rate=0.0)
    store = init_params(config, seed, stack, dtype=np.float64)
    frozen = None
    if stack is not None:
        frozen = {}
        for item, _ in batch:
            if hasattr(item, "tokens"):
                frozen[item.id] = stack.frozen_block(item, config.sentence_len, np.float64)

    loss_and_grad(batch, store, config, dropout_rng=None, stack=stack,
                  frozen_cache=frozen, dtype=np.float64)
    analytic = {k: g.copy() for k, g in store.grads.items()}

    rng = stream(seed, "gradcheck")
    max_rel = 0.0
    for name, tensor in store.params.items():
        flat = tensor.reshape(-1)
        for i in _sample_indices(rng, flat.size, samples_per_tensor):
            orig = flat[i]
            flat[i] = orig + h
            loss_plus = batch_loss(batch, store.params, config, stack, frozen)
            flat[i] = orig - h
            loss_minus = batch_loss(batch, store.params, config, stack, frozen)
            flat[i] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            ga = analytic[name].reshape(-1)[i]
            rel = abs(ga - numeric) / max(abs(ga), abs(numeric), 1e-8)
            max_rel = max(max_rel, rel)
    return float(max_rel)


def toy_linear_check(seed: int, h: float = 1e-2, dim: int = 12, k: int = 5) -> float:
    """Same harness on a purely linear map, where central differences are exact
    up to float64 rounding; errors here mean the checker itself is broken.

    A linear map has no truncation term, so the larger default step just
    shrinks the cancellation error of the difference quotient."""
    rng = stream(seed, "init")
    w = rng.fill_uniform(-1.0, 1.0, (k, dim))
    b = rng.fill_uniform(-1.0, 1.0, (k,))
    x = rng.fill_uniform(-1.0, 1.0, (dim,))
    c = rng.fill_uniform(-1.0, 1.0, (k,))

    def loss(w_, b_):
        return float(c @ (w_ @ x + b_))

    grad_w = np.outer(c, x)
    grad_b = c.copy()
    max_rel = 0.0
    for arr, grad in ((w, grad_w), (b, grad_b)):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss(w, b)
            flat[i] = orig - h
            lm = loss(w, b)
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * h)
            rel = abs(gflat[i] - numeric) / max(abs(gflat[i]), abs(numeric), 1e-8)
            max_rel = max(max_rel, rel)
    return float(max_rel)
