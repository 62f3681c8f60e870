"""Synthetic corpora and sidecar fixtures.

Used by the gradient-check command and by the test suite, so nothing here
depends on real corpora, pretrained vectors, or the exporter component.
The keyword corpus is linearly separable by construction: the token between
the two nominals determines the relation label.
"""

from __future__ import annotations

import numpy as np

from .corpus import Dataset, EntitySpan, LabeledSentence, LabelSet, Token
from .representations import (CharChannel, PositionChannel, RepresentationStack,
                              StaticChannel, StaticTable, UNIVERSAL_TAGSET,
                              write_ctx_store)
from .rng import stream

_FILLERS = ("the", "a", "old", "quiet", "red", "heavy", "small", "bright",
            "wooden", "slow", "near", "second", "common", "plain", "grey")
_ENTITIES = ("engine", "car", "box", "apples", "bottle", "cellar", "wheel",
             "door", "house", "garden", "letter", "author")


def keyword_for_class(c: int) -> str:
    return f"marker{c}"


def make_keyword_corpus(n_sentences: int, n_classes: int = 5, seed: int = 0,
                        split: str = "train", id_offset: int = 0) -> Dataset:
    """Sentences whose label is decided by the marker token between the nominals."""
    rng = stream(seed, "synth-corpus")
    sentences = []
    for i in range(n_sentences):
        c = i % n_classes
        words = []
        for _ in range(rng.randbelow(3)):
            words.append(_FILLERS[rng.randbelow(len(_FILLERS))])
        e1_at = len(words)
        words.append(_ENTITIES[rng.randbelow(len(_ENTITIES))])
        for _ in range(rng.randbelow(2)):
            words.append(_FILLERS[rng.randbelow(len(_FILLERS))])
        words.append(keyword_for_class(c))
        for _ in range(rng.randbelow(2)):
            words.append(_FILLERS[rng.randbelow(len(_FILLERS))])
        e2_at = len(words)
        words.append(_ENTITIES[rng.randbelow(len(_ENTITIES))])
        for _ in range(rng.randbelow(3)):
            words.append(_FILLERS[rng.randbelow(len(_FILLERS))])
        tokens = tuple(Token(w, j) for j, w in enumerate(words))
        sentences.append(LabeledSentence(
            id_offset + i + 1, tokens,
            EntitySpan(e1_at, e1_at), EntitySpan(e2_at, e2_at),
            f"rel-{c}",
        ))
    labels = LabelSet.from_labels((s.label for s in sentences), "collapse")
    return Dataset(split, sentences, labels)


def corpus_vocabulary(dataset: Dataset) -> list[str]:
    vocab = {tok.text for s in dataset.sentences for tok in s.tokens}
    return sorted(vocab)


def random_static_table(words, dim: int, seed: int, oov_seed: int = 0) -> StaticTable:
    rng = stream(seed, "synth-static")
    entries = {w: rng.fill_uniform(-0.5, 0.5, (dim,), dtype=np.float32) for w in words}
    return StaticTable(dim, entries, oov_seed)


def write_static_fixture(path, words, dim: int, seed: int) -> None:
    """Random vectors in the text table format, with a `count dim` header."""
    table = random_static_table(words, dim, seed)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {dim}\n")
        for word in words:
            values = " ".join(repr(float(v)) for v in table.entries[word])
            fh.write(f"{word} {values}\n")


def write_ctx_fixture(path, dataset: Dataset, dim: int, seed: int,
                      model_id: str = "synthetic-ctx") -> None:
    """Random contextual vectors aligned 1:1 with the corpus tokenization."""
    rng = stream(seed, "synth-ctx")
    vectors = {
        s.id: rng.fill_uniform(-1.0, 1.0, (len(s.tokens), dim), dtype=np.float32)
        for s in dataset.sentences
    }
    write_ctx_store(path, dim, vectors, model_id=model_id)


def write_pos_fixture(path, dataset: Dataset, seed: int) -> None:
    rng = stream(seed, "synth-pos")
    with open(path, "w", encoding="utf-8") as fh:
        for s in dataset.sentences:
            tags = [UNIVERSAL_TAGSET[rng.randbelow(len(UNIVERSAL_TAGSET))]
                    for _ in s.tokens]
            fh.write(f"{s.id}\t{' '.join(tags)}\n")


def make_gradcheck_setup(seed: int = 7):
    """Small full-pipeline sample: every channel kind that carries gradients.

    Returns (config, stack, batch) with a 12-token sentence length and a
    64-column composed matrix (static 38 + position 2x5 + characters 16).
    """
    from .net.config import CnnConfig

    corpus = make_keyword_corpus(3, n_classes=5, seed=seed)
    # pad token lists to exactly 12 tokens so the input is a 12-token sentence
    sentences = []
    rng = stream(seed, "synth-gradcheck")
    for s in corpus.sentences:
        words = [t.text for t in s.tokens]
        while len(words) < 12:
            words.append(_FILLERS[rng.randbelow(len(_FILLERS))])
        words = words[:12]
        tokens = tuple(Token(w, j) for j, w in enumerate(words))
        sentences.append(LabeledSentence(s.id, tokens, s.e1, s.e2, s.label))
    vocab = sorted({t.text for s in sentences for t in s.tokens})
    stack = RepresentationStack([
        StaticChannel(random_static_table(vocab, 38, seed), "static"),
        PositionChannel(max_dist=10, dim_per_nominal=5, name="pos"),
        CharChannel(char_dim=8, conv_width=3, out_dim=16, name="char"),
    ])
    config = CnnConfig(num_classes=5, input_dim=stack.total_dim, sentence_len=12,
                       filter_widths=(3, 4, 5), filters_per_width=8, hidden_dim=12,
                       dropout_rate=0.5)
    golds = [i % 5 for i in range(len(sentences))]
    batch = list(zip(sentences, golds))
    return config, stack, batch
