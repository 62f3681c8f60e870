"""Trainable tensors, their initialization, Adam updates, and checkpoints."""

from __future__ import annotations

import math
import struct

import numpy as np

from ..errors import InputError
from ..representations import ParamSpec, RepresentationStack
from ..rng import stream
from .config import AdamConfig, CnnConfig

CKPT_MAGIC = b"RRM1"


class ParamStore:
    """Named parameter tensors with matching gradient and Adam moment buffers."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = params
        self.grads = {k: np.zeros_like(v) for k, v in params.items()}
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0

    def names(self) -> list[str]:
        return list(self.params)


def net_param_specs(config: CnnConfig) -> list[ParamSpec]:
    specs = []
    d = config.input_dim
    f = config.filters_per_width
    for w in config.filter_widths:
        specs.append(ParamSpec(f"conv{w}/W", (f, w, d), "glorot"))
        specs.append(ParamSpec(f"conv{w}/b", (f,), "zeros"))
    if config.hidden_dim > 0:
        specs.append(ParamSpec("ff/W", (config.hidden_dim, config.pooled_dim), "glorot"))
        specs.append(ParamSpec("ff/b", (config.hidden_dim,), "zeros"))
    specs.append(ParamSpec("out/W", (config.num_classes, config.classifier_input), "glorot"))
    specs.append(ParamSpec("out/b", (config.num_classes,), "zeros"))
    return specs


def init_params(config: CnnConfig, seed: int, stack: RepresentationStack | None = None,
                dtype=np.float32) -> ParamStore:
    """Deterministic initialization from the "init" stream of `seed`.

    Tensors are filled in registration order (stack channels first, then conv
    filters by width, feedforward, output), each row-major.  Weights draw
    uniform(-b, b) with the Glorot bound b = sqrt(6 / (fan_in + fan_out));
    biases start at zero.
    """
    specs = (stack.param_specs() if stack is not None else []) + net_param_specs(config)
    rng = stream(seed, "init")
    params: dict[str, np.ndarray] = {}
    for spec in specs:
        if spec.name in params:
            raise InputError(f"duplicate parameter name {spec.name}")
        if spec.init == "zeros":
            params[spec.name] = np.zeros(spec.shape, dtype=dtype)
            continue
        if spec.init == "glorot":
            fan_out = spec.shape[0]
            fan_in = int(np.prod(spec.shape[1:]))
            bound = math.sqrt(6.0 / (fan_in + fan_out))
        elif spec.init == "uniform":
            bound = spec.bound
        else:
            raise InputError(f"unknown initializer {spec.init!r}")
        params[spec.name] = rng.fill_uniform(-bound, bound, spec.shape, dtype=dtype)
    return ParamStore(params)


def adam_step(store: ParamStore, adam: AdamConfig) -> ParamStore:
    """One bias-corrected Adam update from the current gradient buffers."""
    store.t += 1
    b1, b2 = adam.beta1, adam.beta2
    corr1 = 1.0 - b1 ** store.t
    corr2 = 1.0 - b2 ** store.t
    for name, theta in store.params.items():
        g = store.grads[name]
        m = store.m[name]
        v = store.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * np.square(g)
        m_hat = m / corr1
        v_hat = v / corr2
        theta -= adam.learning_rate * m_hat / (np.sqrt(v_hat) + adam.epsilon)
    return store


def save_checkpoint(path, store: ParamStore, config_digest: bytes) -> None:
    """Binary checkpoint: magic, 32-byte config digest, then named tensors."""
    if len(config_digest) != 32:
        raise InputError("config digest must be 32 bytes")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(config_digest)
        names = sorted(store.params)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            tensor = np.asarray(store.params[name], dtype="<f4")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", tensor.ndim))
            fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            fh.write(tensor.tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], bytes]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CKPT_MAGIC:
        raise InputError(f"{path}: not a checkpoint file")
    digest = blob[4:36]
    (count,) = struct.unpack_from("<I", blob, 36)
    offset = 40
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        params[name] = np.frombuffer(blob, dtype="<f4", count=size,
                                     offset=offset).reshape(shape).copy()
        offset += 4 * size
    return params, digest
