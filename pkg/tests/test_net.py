import math

import numpy as np
import pytest

from relrep.corpus import encode_labels
from relrep.net import (AdamConfig, CnnConfig, ParamStore, TrainConfig, adam_step,
                        default_epochs, forward, init_params, load_checkpoint,
                        loss_and_grad, predict, save_checkpoint, train)
from relrep.net.model import ShapeMismatch, forward_batch
from relrep.net.train import build_frozen_cache, predict_dataset
from relrep.representations import (ContextualChannel, PositionChannel,
                                    RepresentationStack, StaticChannel)
from relrep.rng import stream
from relrep.synth import (corpus_vocabulary, make_keyword_corpus,
                          random_static_table, write_ctx_fixture)
from relrep.representations import read_ctx_store


def tiny_config(**kw):
    defaults = dict(num_classes=4, input_dim=10, sentence_len=9,
                    filter_widths=(2, 3), filters_per_width=3, hidden_dim=6,
                    dropout_rate=0.5)
    defaults.update(kw)
    return CnnConfig(**defaults)


def rand_matrix(cfg, seed=0, dtype=np.float32):
    return stream(seed, "net-test").fill_uniform(
        -1, 1, (cfg.sentence_len, cfg.input_dim), dtype=dtype)


class TestForward:
    def test_softmax_normalized_and_nonnegative(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=1)
        for seed in range(20):
            probs = forward(rand_matrix(cfg, seed), store.params, cfg)
            assert probs.shape == (4,)
            assert abs(probs.sum() - 1.0) < 1e-6
            assert np.all(probs >= 0)

    def test_zero_output_layer_gives_uniform(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=1)
        store.params["out/W"][...] = 0
        store.params["out/b"][...] = 0
        probs = forward(rand_matrix(cfg), store.params, cfg)
        assert np.allclose(probs, 0.25, atol=1e-7)

    def test_wrong_input_dim_raises(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=1)
        with pytest.raises(ShapeMismatch):
            forward(np.zeros((9, 11), dtype=np.float32), store.params, cfg)

    def test_convolution_position_count(self):
        cfg = tiny_config(sentence_len=7, filter_widths=(3,))
        store = init_params(cfg, seed=1)
        m = rand_matrix(cfg)[None]
        _, cache = forward_batch(np.ascontiguousarray(m), store.params, cfg)
        _, pre, _ = cache["conv"][0]
        assert pre.shape[1] == 5  # L - w + 1

    def test_hidden_dim_zero_collapses_to_single_layer(self):
        cfg = tiny_config(hidden_dim=0)
        store = init_params(cfg, seed=1)
        assert "ff/W" not in store.params
        probs = forward(rand_matrix(cfg), store.params, cfg)
        assert abs(probs.sum() - 1.0) < 1e-6

    def test_dropout_train_vs_eval(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=1)
        m = rand_matrix(cfg)
        eval_probs = forward(m, store.params, cfg, mode="eval")
        train_probs = forward(m, store.params, cfg, mode="train",
                              dropout_rng=stream(3, "dropout"))
        assert not np.allclose(eval_probs, train_probs)
        again = forward(m, store.params, cfg, mode="train",
                        dropout_rng=stream(3, "dropout"))
        assert np.array_equal(train_probs, again)


class TestInit:
    def test_bit_identical_for_same_seed(self):
        cfg = tiny_config()
        a = init_params(cfg, seed=9)
        b = init_params(cfg, seed=9)
        assert a.names() == b.names()
        for name in a.names():
            assert a.params[name].tobytes() == b.params[name].tobytes()

    def test_biases_exactly_zero(self):
        store = init_params(tiny_config(), seed=9)
        for name, tensor in store.params.items():
            if name.endswith("/b"):
                assert np.all(tensor == 0)

    def test_weights_within_glorot_bound(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=9)
        for w in cfg.filter_widths:
            fan_in, fan_out = w * cfg.input_dim, cfg.filters_per_width
            bound = math.sqrt(6 / (fan_in + fan_out))
            assert np.all(np.abs(store.params[f"conv{w}/W"]) < bound)

    def test_seed_changes_weights(self):
        cfg = tiny_config()
        assert init_params(cfg, 1).params["out/W"].tobytes() != \
            init_params(cfg, 2).params["out/W"].tobytes()


class TestLoss:
    def test_uniform_prediction_loss_is_log_k(self):
        cfg = tiny_config(dropout_rate=0.0)
        store = init_params(cfg, seed=1)
        store.params["out/W"][...] = 0
        store.params["out/b"][...] = 0
        loss = loss_and_grad([(rand_matrix(cfg), 2)], store, cfg)
        assert loss == pytest.approx(math.log(4), rel=1e-6)

    def test_confident_correct_prediction_loss_near_zero(self):
        cfg = tiny_config(dropout_rate=0.0)
        store = init_params(cfg, seed=1)
        store.params["out/W"][...] = 0
        store.params["out/b"][...] = np.float32([50, 0, 0, 0])
        loss = loss_and_grad([(rand_matrix(cfg), 0)], store, cfg)
        assert loss < 1e-6

    def test_initial_loss_sane_for_balanced_random_data(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=5)
        batch = [(rand_matrix(cfg, seed=i), i % 4) for i in range(16)]
        loss = loss_and_grad(batch, store, cfg, stream(5, "dropout"))
        assert 0.5 * math.log(4) <= loss <= 2 * math.log(4)

    def test_grad_buffers_overwritten_not_accumulated(self):
        cfg = tiny_config(dropout_rate=0.0)
        store = init_params(cfg, seed=1)
        batch = [(rand_matrix(cfg), 1)]
        loss_and_grad(batch, store, cfg)
        first = {k: v.copy() for k, v in store.grads.items()}
        loss_and_grad(batch, store, cfg)
        for name in store.grads:
            assert np.array_equal(store.grads[name], first[name])


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        store = ParamStore({"w": np.float32([1.0, -2.0])})
        adam_step(store, AdamConfig())
        assert np.array_equal(store.params["w"], np.float32([1.0, -2.0]))

    def test_hand_computed_first_step(self):
        # theta=1, g=0.5, t=1: m_hat=0.5, v_hat=0.25, step ~ lr -> 0.9990
        store = ParamStore({"w": np.float64([1.0])})
        store.grads["w"][...] = 0.5
        adam_step(store, AdamConfig())
        assert store.t == 1
        assert store.params["w"][0] == pytest.approx(1.0 - 0.001 * 0.5 / (0.5 + 1e-8),
                                                     abs=1e-12)
        assert store.params["w"][0] == pytest.approx(0.9990, abs=1e-6)

    def test_equal_gradients_get_equal_updates(self):
        store = ParamStore({"a": np.float64([2.0]), "b": np.float64([5.0])})
        store.grads["a"][...] = 0.3
        store.grads["b"][...] = 0.3
        adam_step(store, AdamConfig())
        assert (2.0 - store.params["a"][0]) == pytest.approx(5.0 - store.params["b"][0])


class TestPredict:
    def test_uniform_ties_break_to_class_zero(self):
        cfg = tiny_config()
        store = init_params(cfg, seed=1)
        store.params["out/W"][...] = 0
        store.params["out/b"][...] = 0
        assert predict(store.params, cfg, None, rand_matrix(cfg)) == 0

    def test_argmax_of_crafted_probabilities(self):
        cfg = tiny_config(num_classes=3)
        store = init_params(cfg, seed=1)
        store.params["out/W"][...] = 0
        store.params["out/b"][...] = np.log(np.float32([0.1, 0.7, 0.2]))
        assert predict(store.params, cfg, None, rand_matrix(cfg)) == 1

    def test_monotone_logit_transform_keeps_argmax(self):
        cfg = tiny_config(num_classes=3)
        store = init_params(cfg, seed=1)
        store.params["out/W"][...] = 0
        store.params["out/b"][...] = np.float32([0.3, -0.2, 1.1])
        before = predict(store.params, cfg, None, rand_matrix(cfg))
        store.params["out/b"][...] = 4 * store.params["out/b"] + 2.5
        assert predict(store.params, cfg, None, rand_matrix(cfg)) == before


def small_setup(n=12, ctx=False, tmp_path=None):
    ds = make_keyword_corpus(n, n_classes=3, seed=2)
    channels = [
        StaticChannel(random_static_table(corpus_vocabulary(ds), 12, seed=4), "static"),
        PositionChannel(8, 3, "pos"),
    ]
    if ctx:
        path = tmp_path / "ctx.ctxv1"
        write_ctx_fixture(path, ds, 6, seed=5)
        channels.append(ContextualChannel(read_ctx_store(path), "ctx"))
    stack = RepresentationStack(channels)
    cfg = CnnConfig(num_classes=len(ds.labels), input_dim=stack.total_dim,
                    sentence_len=14, filter_widths=(2, 3), filters_per_width=4,
                    hidden_dim=8)
    return ds, stack, cfg


class TestTrain:
    def test_training_is_deterministic(self):
        ds, stack, cfg = small_setup()
        runs = []
        for _ in range(2):
            store, history = train(ds, None, stack, cfg, AdamConfig(),
                                   TrainConfig(seed=3, epochs=3, batch_size=5))
            runs.append((store, history))
        for (e1, l1, d1), (e2, l2, d2) in zip(runs[0][1], runs[1][1]):
            assert (e1, l1) == (e2, l2)
            assert d1 == d2 or (math.isnan(d1) and math.isnan(d2))
        for name in runs[0][0].params:
            assert runs[0][0].params[name].tobytes() == runs[1][0].params[name].tobytes()

    def test_epoch_zero_rejected(self):
        with pytest.raises(Exception):
            TrainConfig(seed=1, epochs=0)

    def test_default_epoch_profiles(self):
        assert default_epochs("contextual") == 70
        assert default_epochs("plain") == 120

    def test_history_shape_and_loss_decreases(self):
        ds, stack, cfg = small_setup()
        _, history = train(ds, None, stack, cfg, AdamConfig(),
                           TrainConfig(seed=3, epochs=6, batch_size=6))
        assert [row[0] for row in history] == [1, 2, 3, 4, 5, 6]
        assert history[-1][1] < history[0][1]

    def test_dev_f1_tracked_when_dev_given(self):
        ds, stack, cfg = small_setup(n=15)
        dev = make_keyword_corpus(6, n_classes=3, seed=8, split="dev", id_offset=100)
        dev.labels = ds.labels
        _, history = train(ds, dev, stack, cfg, AdamConfig(),
                           TrainConfig(seed=3, epochs=2, batch_size=6))
        for _, _, dev_f1 in history:
            assert 0.0 <= dev_f1 <= 1.0

    def test_frozen_inputs_unchanged_after_steps(self, tmp_path):
        ds, stack, cfg = small_setup(ctx=True, tmp_path=tmp_path)
        static = stack.channels[0].table
        ctx = stack.channels[2].store
        before_static = {w: v.tobytes() for w, v in static.entries.items()}
        before_ctx = {i: v.tobytes() for i, v in ctx.vectors.items()}
        train(ds, None, stack, cfg, AdamConfig(), TrainConfig(seed=3, epochs=2, batch_size=4))
        assert {w: v.tobytes() for w, v in static.entries.items()} == before_static
        assert {i: v.tobytes() for i, v in ctx.vectors.items()} == before_ctx


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        cfg = tiny_config()
        store = init_params(cfg, seed=7)
        digest = bytes(range(32))
        path = tmp_path / "model.rrm1"
        save_checkpoint(path, store, digest)
        params, loaded_digest = load_checkpoint(path)
        assert loaded_digest == digest
        assert set(params) == set(store.params)
        for name in params:
            assert np.array_equal(params[name],
                                  store.params[name].astype(np.float32))

    def test_magic_validated(self, tmp_path):
        path = tmp_path / "junk.rrm1"
        path.write_bytes(b"XXXX" + bytes(40))
        with pytest.raises(Exception, match="checkpoint"):
            load_checkpoint(path)


class TestPoolingSubgradient:
    def test_non_argmax_perturbation_leaves_pooled_output(self):
        from relrep import kernels
        a = stream(1, "pool-test").fill_uniform(-1, 1, (2, 8, 3), dtype=np.float64)
        pooled, arg = kernels.maxpool_forward(a)
        perturbed = a.copy()
        b, f = 0, 1
        non_arg = [p for p in range(8) if p != arg[b, f]]
        margin = pooled[b, f] - np.partition(a[b, :, f], -2)[-2]
        h = min(1e-6, margin / 4) if margin > 0 else 1e-9
        perturbed[b, non_arg[0], f] += h
        pooled2, _ = kernels.maxpool_forward(perturbed)
        assert pooled2[b, f] == pooled[b, f]
        perturbed[b, non_arg[0], f] -= 2 * h
        pooled3, _ = kernels.maxpool_forward(perturbed)
        assert pooled3[b, f] == pooled[b, f]
