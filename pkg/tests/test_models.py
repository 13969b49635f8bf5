from pathlib import Path

import numpy as np
import pytest

from cdlens.checkpoint import LSTM_GATES
from cdlens.models import (
    AttentionMemory,
    LstmState,
    LstmWeights,
    ShaBlockWeights,
    attention_weights,
    boom_reduce,
    forward,
    lstm_cell_step,
    perplexity,
    sha_block_step,
)
from cdlens.numerics import sigmoid

from conftest import make_checkpoint, tiny_vocab

DATA = Path(__file__).parent / "data"


def zero_lstm_weights(d_h, d_x, bias=None):
    b = bias if bias is not None else {g: np.zeros(d_h) for g in LSTM_GATES}
    return LstmWeights(
        W={g: np.zeros((d_h, d_x)) for g in LSTM_GATES},
        V={g: np.zeros((d_h, d_h)) for g in LSTM_GATES},
        b=b,
    )


class TestLstmCell:
    def test_zero_weights_give_zero_state(self):
        lw = zero_lstm_weights(3, 3)
        h, c = lstm_cell_step(lw, np.ones(3), np.ones(3), np.ones(3))
        # all gates sigmoid(0)=0.5, g=tanh(0)=0: c = 0.5*c_prev, h = 0.5*tanh(c)
        np.testing.assert_allclose(c, 0.5)
        np.testing.assert_allclose(h, 0.5 * np.tanh(0.5))

    def test_saturated_forget_gate_copies_cell(self):
        bias = {g: np.zeros(2) for g in LSTM_GATES}
        bias["f"] = np.full(2, 50.0)
        bias["i"] = np.full(2, -50.0)
        lw = zero_lstm_weights(2, 2, bias)
        c_prev = np.array([0.3, -1.2])
        _, c = lstm_cell_step(lw, np.zeros(2), np.zeros(2), c_prev)
        np.testing.assert_allclose(c, c_prev, atol=1e-12)

    def test_against_inline_reference(self):
        rng = np.random.default_rng(7)
        d_h, d_x = 4, 4
        lw = LstmWeights(
            W={g: rng.normal(size=(d_h, d_x)) for g in LSTM_GATES},
            V={g: rng.normal(size=(d_h, d_h)) for g in LSTM_GATES},
            b={g: rng.normal(size=d_h) for g in LSTM_GATES},
        )
        x, h0, c0 = rng.normal(size=d_x), rng.normal(size=d_h), rng.normal(size=d_h)
        h, c = lstm_cell_step(lw, x, h0, c0)
        # independent spelled-out recurrence
        f = 1 / (1 + np.exp(-(lw.W["f"] @ x + lw.V["f"] @ h0 + lw.b["f"])))
        i = 1 / (1 + np.exp(-(lw.W["i"] @ x + lw.V["i"] @ h0 + lw.b["i"])))
        g = np.tanh(lw.W["g"] @ x + lw.V["g"] @ h0 + lw.b["g"])
        o = 1 / (1 + np.exp(-(lw.W["o"] @ x + lw.V["o"] @ h0 + lw.b["o"])))
        c_ref = f * c0 + i * g
        np.testing.assert_allclose(c, c_ref, atol=1e-12)
        np.testing.assert_allclose(h, o * np.tanh(c_ref), atol=1e-12)


class TestBoomReduce:
    def test_identity_when_sizes_match(self):
        u = np.array([1.0, 2.0])
        assert boom_reduce(u, 2) is u

    def test_chunk_sum(self):
        u = np.array([1.0, 2.0, 10.0, 20.0, 100.0, 200.0])
        np.testing.assert_array_equal(boom_reduce(u, 2), [111.0, 222.0])


class TestAttention:
    def test_single_entry_weight_is_one(self):
        w = attention_weights(np.ones(4), [np.ones(4)], 4)
        np.testing.assert_array_equal(w, [1.0])

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(3)
        keys = [rng.normal(size=4) for _ in range(5)]
        w = attention_weights(rng.normal(size=4), keys, 4)
        assert w.shape == (5,)
        assert abs(w.sum() - 1.0) <= 1e-12

    def test_scaling_factor(self):
        # two keys, scores q.k / sqrt(d): hand-computable softmax
        q = np.array([2.0, 0.0, 0.0, 0.0])
        keys = [np.array([1.0, 0, 0, 0]), np.array([-1.0, 0, 0, 0])]
        w = attention_weights(q, keys, 4)
        s = np.exp(1.0)  # scores are +-2/sqrt(4) = +-1
        np.testing.assert_allclose(w, [s / (s + 1 / s), (1 / s) / (s + 1 / s)])

    def test_memory_window_eviction(self):
        mem = AttentionMemory(window=2)
        for v in range(3):
            mem.append(np.full(2, float(v)))
        assert len(mem.entries) == 2
        np.testing.assert_array_equal(mem.entries[0], [1.0, 1.0])

    def test_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            AttentionMemory(window=0)


class TestShaBlock:
    def test_step_matches_inline_reference(self, small_sha):
        from cdlens.numerics import gelu, layer_norm

        bw = ShaBlockWeights.from_tensors(small_sha.tensors, 0, has_attention=True)
        eps = small_sha.config.layer_norm_eps
        d_h = small_sha.config.hidden_size
        rng = np.random.default_rng(11)
        x = rng.normal(size=d_h)
        state = LstmState(h=rng.normal(size=d_h), c=rng.normal(size=d_h))
        mem = AttentionMemory(4)
        mem.append(rng.normal(size=d_h))

        y, state2, attn = sha_block_step(bw, x, state, AttentionMemoryCopy(mem), True, eps)

        a = layer_norm(x, bw.ln_in.alpha, bw.ln_in.delta, eps)
        h, c = lstm_cell_step(bw.lstm, a, state.h, state.c)
        m = layer_norm(h, bw.ln_mem.alpha, bw.ln_mem.delta, eps)
        entries = [mem.entries[0], m]
        q = bw.Wq @ m
        scores = np.array([q @ (bw.Wk @ mj) for mj in entries]) / np.sqrt(d_h)
        e = np.exp(scores - scores.max())
        w = e / e.sum()
        ctx = sum(wi * (bw.Wv @ mj) for wi, mj in zip(w, entries))
        out = h + ctx
        bvec = layer_norm(out, bw.ln_out.alpha, bw.ln_out.delta, eps)
        y_ref = out + boom_reduce(gelu(bw.boom_W @ bvec + bw.boom_b), d_h)

        np.testing.assert_allclose(y, y_ref, atol=1e-12)
        np.testing.assert_allclose(state2.c, c, atol=1e-12)
        np.testing.assert_allclose(attn, w, atol=1e-12)

    def test_no_attention_skips_context(self, small_sha):
        from cdlens.numerics import gelu, layer_norm

        bw = ShaBlockWeights.from_tensors(small_sha.tensors, 0, has_attention=True)
        eps = small_sha.config.layer_norm_eps
        d_h = small_sha.config.hidden_size
        x = np.linspace(-1, 1, d_h)
        state = LstmState.zeros(d_h)
        y, _, attn = sha_block_step(bw, x, state, AttentionMemory(4), False, eps)
        assert attn is None
        a = layer_norm(x, bw.ln_in.alpha, bw.ln_in.delta, eps)
        h, _ = lstm_cell_step(bw.lstm, a, state.h, state.c)
        bvec = layer_norm(h, bw.ln_out.alpha, bw.ln_out.delta, eps)
        np.testing.assert_allclose(y, h + boom_reduce(gelu(bw.boom_W @ bvec + bw.boom_b), d_h), atol=1e-12)


def AttentionMemoryCopy(mem):
    out = AttentionMemory(mem.window)
    out.entries = list(mem.entries)
    return out


class TestForward:
    def test_first_token_attention_is_one(self, small_sha):
        _, trace = forward(small_sha, [1, 2, 3], collect=True)
        np.testing.assert_array_equal(trace[0]["attn"], [1.0])
        assert trace[1]["attn"].shape == (2,)
        assert trace[2]["attn"].shape == (3,)

    @pytest.mark.parametrize("fixture", ["small_lstm", "small_sha"])
    def test_causality(self, fixture, request):
        ckpt = request.getfixturevalue(fixture)
        tokens = [1, 5, 2, 8, 3]
        full = forward(ckpt, tokens)
        prefix = forward(ckpt, tokens[:3])
        for t in range(3):
            np.testing.assert_array_equal(full[t], prefix[t])

    def test_token_range_checked(self, small_lstm):
        with pytest.raises(ValueError, match="out of range"):
            forward(small_lstm, [0, 99])

    @pytest.mark.parametrize("key,fixture", [("lstm", "small_lstm"), ("sha_rnn", "small_sha")])
    def test_golden_logits(self, key, fixture, request):
        # frozen regression fixture; guards against silent numeric drift
        data = np.load(DATA / "golden_logits.npz")
        ckpt = request.getfixturevalue(fixture)
        logits = np.stack(forward(ckpt, list(data["tokens"])))
        np.testing.assert_array_equal(logits, data[key])


class TestPerplexity:
    def test_uniform_model_gives_vocab_size(self):
        vocab = tiny_vocab()
        ckpt = make_checkpoint("lstm", d_h=4, seed=0, vocab=vocab)
        for name, arr in ckpt.tensors.items():
            ckpt.tensors[name] = np.zeros_like(arr)
        assert perplexity(ckpt, [0, 1, 2, 3]) == pytest.approx(len(vocab))

    def test_confident_model_gives_one(self):
        vocab = tiny_vocab()
        ckpt = make_checkpoint("lstm", d_h=4, seed=0, vocab=vocab)
        for name, arr in ckpt.tensors.items():
            ckpt.tensors[name] = np.zeros_like(arr)
        ckpt.tensors["decoder.b"][3] = 1000.0
        assert perplexity(ckpt, [0, 3, 3, 3]) == pytest.approx(1.0)

    def test_hand_nll(self, small_lstm):
        from cdlens.numerics import softmax

        tokens = [1, 4, 2]
        logits = forward(small_lstm, tokens)
        nll = -(np.log(softmax(logits[0])[4]) + np.log(softmax(logits[1])[2])) / 2
        assert perplexity(small_lstm, tokens) == pytest.approx(float(np.exp(nll)), rel=1e-12)

    def test_needs_two_tokens(self, small_lstm):
        with pytest.raises(ValueError, match="at least 2"):
            perplexity(small_lstm, [1])
