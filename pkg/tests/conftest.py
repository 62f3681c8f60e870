"""Shared helpers: synthetic project directories for CLI and acceptance tests."""

import json

from relrep.corpus import render_with_markup, save_dataset
from relrep.synth import (corpus_vocabulary, make_keyword_corpus,
                          write_ctx_fixture, write_pos_fixture,
                          write_static_fixture)


def semeval_text(dataset) -> str:
    """Render a dataset back into the two-line SemEval record format."""
    parts = []
    for s in dataset.sentences:
        parts.append(f'{s.id}\t"{render_with_markup(s)}"\n{s.label}\n')
    return "\n".join(parts)


SMALL_CNN = {
    "sentence_len": 14,
    "filter_widths": [2, 3],
    "filters_per_width": 3,
    "hidden_dim": 6,
    "dropout_rate": 0.5,
}


def make_project(root, n_train=10, n_test=6, n_classes=3, static_dim=10,
                 ctx_dim=None, pos_tags=False, cnn=None, train_cfg=None,
                 seeds=(1, 2), extra_stacks=None, corpus_seed=0):
    """Build a self-contained project dir: datasets, sidecars, and config.json.

    Returns the config path.  The default stack is {static, position}; a
    contextual channel is appended when ctx_dim is given.
    """
    root.mkdir(parents=True, exist_ok=True)
    train = make_keyword_corpus(n_train, n_classes, seed=corpus_seed)
    test = make_keyword_corpus(n_test, n_classes, seed=corpus_seed + 1,
                               split="test", id_offset=10_000)
    save_dataset(train, root / "train.json")
    save_dataset(test, root / "test.json")

    vocab = sorted(set(corpus_vocabulary(train)) | set(corpus_vocabulary(test)))
    write_static_fixture(root / "vectors.txt", vocab, static_dim, seed=5)

    channels = [
        {"kind": "static", "path": "vectors.txt"},
        {"kind": "position", "max_dist": 10, "dim": 3},
    ]
    config = {
        "train": "train.json",
        "test": "test.json",
        "dev_fraction": 0.2,
        "stacks": [{"name": "baseline", "channels": channels}],
        "cnn": dict(cnn if cnn is not None else SMALL_CNN),
        "train_cfg": dict(train_cfg if train_cfg is not None else
                          {"batch_size": 4, "epochs": 2}),
        "seeds": list(seeds),
        "out": str(root / "runs"),
    }
    if ctx_dim is not None:
        write_ctx_fixture(root / "ctx.ctxv1", train, ctx_dim, seed=6)
        # one sidecar covering both splits
        from relrep.representations import read_ctx_store, write_ctx_store
        from relrep.rng import stream
        rng = stream(6, "synth-ctx-test")
        vectors = dict(read_ctx_store(root / "ctx.ctxv1").vectors)
        for s in test.sentences:
            vectors[s.id] = rng.fill_uniform(-1, 1, (len(s.tokens), ctx_dim))
        write_ctx_store(root / "ctx.ctxv1", ctx_dim, vectors, model_id="fixture")
        channels.append({"kind": "contextual", "path": "ctx.ctxv1"})
    if pos_tags:
        merged = make_keyword_corpus(0, n_classes, seed=0)
        merged.sentences = train.sentences + test.sentences
        write_pos_fixture(root / "tags.tsv", merged, seed=7)
        config["pos_sidecar"] = "tags.tsv"
        channels.append({"kind": "pos_tags"})
    if extra_stacks:
        config["stacks"].extend(extra_stacks)

    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=1), encoding="utf-8")
    return config_path
