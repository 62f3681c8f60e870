"""Forward pass, loss, and hand-derived backpropagation.

Architecture: per filter width a valid 1-D convolution over token positions,
ReLU, max-pool over positions; pooled vectors concatenated; feedforward layer
with ReLU (skipped when hidden_dim = 0); inverted dropout in train mode; a
fully connected layer to class logits; softmax.

Gradients flow through every layer and, when a representation stack is in
play, on into its trainable channels (position tables, character network).
Max-pool routes each gradient to the first maximal position.
"""

from __future__ import annotations

import os

import numpy as np

from .. import kernels
from ..corpus import LabeledSentence
from ..errors import InputError
from ..representations import RepresentationStack, SentenceMatrix
from .config import CnnConfig
from .params import ParamStore

DEBUG_CHECKS = bool(os.environ.get("RELREP_DEBUG"))


class ShapeMismatch(InputError):
    pass


def _check_finite(name: str, arr: np.ndarray) -> None:
    if DEBUG_CHECKS and not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")


def _as_matrix(item) -> np.ndarray:
    return item.data if isinstance(item, SentenceMatrix) else np.asarray(item)


def forward_batch(matrices: np.ndarray, params: dict[str, np.ndarray],
                  config: CnnConfig, train: bool = False, dropout_rng=None):
    """Probabilities (B, K) plus the cache needed for backpropagation."""
    if matrices.ndim != 3 or matrices.shape[2] != config.input_dim:
        raise ShapeMismatch(f"expected (B, L, {config.input_dim}) input, "
                            f"got {matrices.shape}")
    if matrices.shape[1] < max(config.filter_widths):
        raise ShapeMismatch(f"sentence length {matrices.shape[1]} shorter than "
                            f"the widest filter {max(config.filter_widths)}")
    batch = matrices.shape[0]
    dtype = matrices.dtype

    conv_cache = []
    pooled_parts = []
    for w in config.filter_widths:
        pre = kernels.conv1d_forward(matrices, params[f"conv{w}/W"], params[f"conv{w}/b"])
        act = np.maximum(pre, 0)
        pooled, arg = kernels.maxpool_forward(act)
        conv_cache.append((w, pre, arg))
        pooled_parts.append(pooled)
        _check_finite(f"conv{w}", pre)
    z = np.concatenate(pooled_parts, axis=1)

    if config.hidden_dim > 0:
        pre_h = z @ params["ff/W"].T + params["ff/b"]
        h = np.maximum(pre_h, 0)
    else:
        pre_h = None
        h = z

    if train and config.dropout_rate > 0:
        if dropout_rng is None:
            raise InputError("train-mode forward with dropout needs a dropout stream")
        u = dropout_rng.fill_uniform(0.0, 1.0, h.shape)
        mask = (u >= config.dropout_rate).astype(dtype) / dtype.type(1.0 - config.dropout_rate)
        h_drop = h * mask
    else:
        mask = None
        h_drop = h

    logits = h_drop @ params["out/W"].T + params["out/b"]
    _check_finite("logits", logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    cache = {
        "matrices": matrices, "conv": conv_cache, "z": z, "pre_h": pre_h,
        "mask": mask, "h": h, "h_drop": h_drop, "logits": logits,
        "shifted": shifted, "probs": probs, "batch": batch,
    }
    return probs, cache


def forward(matrix, params: dict[str, np.ndarray], config: CnnConfig,
            mode: str = "eval", dropout_rng=None) -> np.ndarray:
    """Single-sentence class probabilities (sums to 1)."""
    m = _as_matrix(matrix)
    probs, _ = forward_batch(np.ascontiguousarray(m[None]), params, config,
                             train=(mode == "train"), dropout_rng=dropout_rng)
    return probs[0]


def _loss_from_cache(cache, golds: np.ndarray) -> float:
    shifted = cache["shifted"]
    log_z = np.log(np.exp(shifted).sum(axis=1))
    gold_logit = shifted[np.arange(len(golds)), golds]
    return float(np.mean(log_z - gold_logit))


def _backward_from_cache(cache, golds: np.ndarray, params, config: CnnConfig, grads):
    """Fills `grads` for net parameters; returns the input-matrix gradient."""
    batch = cache["batch"]
    probs = cache["probs"]
    d_logits = probs.copy()
    d_logits[np.arange(batch), golds] -= 1.0
    d_logits /= batch

    h_drop = cache["h_drop"]
    grads["out/W"][...] = d_logits.T @ h_drop
    grads["out/b"][...] = d_logits.sum(axis=0)
    d_h = d_logits @ params["out/W"]
    if cache["mask"] is not None:
        d_h = d_h * cache["mask"]
    if config.hidden_dim > 0:
        d_pre_h = d_h * (cache["pre_h"] > 0)
        grads["ff/W"][...] = d_pre_h.T @ cache["z"]
        grads["ff/b"][...] = d_pre_h.sum(axis=0)
        d_z = d_pre_h @ params["ff/W"]
    else:
        d_z = d_h

    matrices = cache["matrices"]
    d_matrices = np.zeros_like(matrices)
    offset = 0
    f = config.filters_per_width
    for w, pre, arg in cache["conv"]:
        d_pooled = np.ascontiguousarray(d_z[:, offset:offset + f])
        offset += f
        d_act = kernels.maxpool_backward(d_pooled, arg, pre.shape[1])
        d_pre = d_act * (pre > 0)
        d_m, d_w, d_b = kernels.conv1d_backward(matrices, params[f"conv{w}/W"], d_pre)
        grads[f"conv{w}/W"][...] = d_w
        grads[f"conv{w}/b"][...] = d_b
        d_matrices += d_m
    return d_matrices


def _compose_batch(items, config: CnnConfig, params, stack, frozen_cache, dtype):
    """Stack per-item matrices; returns (matrices, sentences, channel caches)."""
    mats = []
    sentences = []
    caches = []
    for item in items:
        if isinstance(item, LabeledSentence):
            if stack is None:
                raise InputError("sentence batches need a representation stack")
            if frozen_cache is not None and item.id in frozen_cache:
                block = frozen_cache[item.id].copy()
            else:
                block = stack.frozen_block(item, config.sentence_len, dtype)
            caches.append(stack.write_trainable(block, item, params))
            sentences.append(item)
            mats.append(block)
        else:
            mats.append(np.asarray(_as_matrix(item), dtype=dtype))
            sentences.append(None)
            caches.append(None)
    return np.ascontiguousarray(np.stack(mats)), sentences, caches


def loss_and_grad(batch, store: ParamStore, config: CnnConfig, dropout_rng=None,
                  stack: RepresentationStack | None = None, frozen_cache=None,
                  dtype=np.float32) -> float:
    """Mean cross-entropy over the batch; gradient buffers are overwritten.

    Batch items are (input, gold index) pairs where the input is a sentence
    matrix or, when `stack` is given, a LabeledSentence composed on the fly
    so gradients reach the stack's trainable channels.
    """
    if not batch:
        raise InputError("batch must be non-empty")
    items, golds = zip(*batch)
    golds = np.asarray(golds, dtype=np.intp)
    matrices, sentences, channel_caches = _compose_batch(
        items, config, store.params, stack, frozen_cache, dtype)

    store.zero_grads()
    _, cache = forward_batch(matrices, store.params, config,
                             train=True, dropout_rng=dropout_rng)
    loss = _loss_from_cache(cache, golds)
    d_matrices = _backward_from_cache(cache, golds, store.params, config, store.grads)
    if stack is not None:
        for i, sent in enumerate(sentences):
            if sent is not None:
                stack.backward(d_matrices[i], sent, store.params, store.grads,
                               channel_caches[i])
    return loss


def batch_loss(batch, params: dict[str, np.ndarray], config: CnnConfig,
               stack: RepresentationStack | None = None, frozen_cache=None,
               dtype=np.float64) -> float:
    """Loss only, no gradients: the function the finite-difference check probes."""
    items, golds = zip(*batch)
    golds = np.asarray(golds, dtype=np.intp)
    matrices, _, _ = _compose_batch(items, config, params, stack, frozen_cache, dtype)
    _, cache = forward_batch(matrices, params, config, train=False)
    return _loss_from_cache(cache, golds)


def predict(params: dict[str, np.ndarray], config: CnnConfig,
            stack: RepresentationStack | None, sentence, length: int | None = None) -> int:
    """Argmax class in eval mode; ties break toward the lowest index."""
    from ..representations import compose
    if isinstance(sentence, LabeledSentence):
        matrix = compose(stack, sentence, length or config.sentence_len, params)
    else:
        matrix = sentence
    probs = forward(matrix, params, config, mode="eval")
    return int(np.argmax(probs))
