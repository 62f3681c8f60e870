"""The training loop: shuffled minibatches, Adam steps, per-epoch history."""

from __future__ import annotations

import numpy as np

from ..corpus import Dataset, encode_labels
from ..errors import InputError
from ..metrics import aggregate, confusion
from ..representations import RepresentationStack
from ..rng import stream
from .config import AdamConfig, CnnConfig, TrainConfig, default_epochs
from .model import forward_batch, loss_and_grad, _compose_batch
from .params import ParamStore, adam_step, init_params


def build_frozen_cache(dataset: Dataset, stack: RepresentationStack,
                       length: int, dtype=np.float32) -> dict[int, np.ndarray]:
    """Precompose the frozen channels once per sentence.

    Doing this up front doubles as fail-fast validation: missing contextual
    vectors, missing POS tags, and token-count mismatches surface here,
    before any training epoch starts.
    """
    return {s.id: stack.frozen_block(s, length, dtype) for s in dataset.sentences}


def predict_dataset(dataset: Dataset, store_params, config: CnnConfig,
                    stack: RepresentationStack, frozen_cache=None,
                    batch_size: int = 64) -> list[int]:
    """Eval-mode argmax predictions for every sentence, in dataset order."""
    preds: list[int] = []
    sentences = dataset.sentences
    for lo in range(0, len(sentences), batch_size):
        chunk = sentences[lo:lo + batch_size]
        matrices, _, _ = _compose_batch(chunk, config, store_params, stack,
                                        frozen_cache, np.float32)
        probs, _ = forward_batch(matrices, store_params, config, train=False)
        preds.extend(int(i) for i in np.argmax(probs, axis=1))
    return preds


def dataset_macro_f1(dataset: Dataset, preds: list[int]) -> float:
    golds = encode_labels(dataset, dataset.labels)
    cm = confusion(preds, golds, len(dataset.labels))
    return aggregate(cm, dataset.labels).macro[2]


def train(train_ds: Dataset, dev_ds: Dataset | None, stack: RepresentationStack,
          cnn: CnnConfig, adam: AdamConfig, tc: TrainConfig):
    """Deterministic training; returns (final ParamStore, per-epoch history).

    History rows are (epoch, mean train loss, dev macro-F1); the dev column is
    NaN when no dev set is given.  Everything stochastic (init, shuffling,
    dropout) derives from tc.seed, so reruns are bit-identical.
    """
    if not train_ds.sentences:
        raise InputError("training set is empty")
    epochs = tc.epochs if tc.epochs is not None else default_epochs(stack.epochs_profile)
    if epochs < 1:
        raise InputError("epochs must be at least 1")

    golds = encode_labels(train_ds, train_ds.labels)
    store = init_params(cnn, tc.seed, stack)
    frozen = build_frozen_cache(train_ds, stack, cnn.sentence_len)
    dev_frozen = (build_frozen_cache(dev_ds, stack, cnn.sentence_len)
                  if dev_ds is not None and dev_ds.sentences else None)

    shuffle_rng = stream(tc.seed, "shuffle")
    dropout_rng = stream(tc.seed, "dropout")
    order = list(range(len(train_ds.sentences)))
    history: list[tuple[int, float, float]] = []

    for epoch in range(1, epochs + 1):
        if tc.shuffle_each_epoch:
            shuffle_rng.shuffle(order)
        losses = []
        for lo in range(0, len(order), tc.batch_size):
            batch = [(train_ds.sentences[i], golds[i]) for i in order[lo:lo + tc.batch_size]]
            loss = loss_and_grad(batch, store, cnn, dropout_rng,
                                 stack=stack, frozen_cache=frozen)
            adam_step(store, adam)
            losses.append(loss)
        if dev_frozen is not None:
            dev_preds = predict_dataset(dev_ds, store.params, cnn, stack, dev_frozen)
            dev_f1 = dataset_macro_f1(dev_ds, dev_preds)
        else:
            dev_f1 = float("nan")
        history.append((epoch, float(np.mean(losses)), dev_f1))
    return store, history


def write_history(path, history) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,dev_f1\n")
        for epoch, loss, dev_f1 in history:
            fh.write(f"{epoch},{loss!r},{dev_f1!r}\n")
