"""Plain (undecomposed) forward passes for the stacked-LSTM and SHA-RNN LMs.

These are the reference computations the decomposition engine must
reconstruct. Everything is single-sentence, causal and float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import LSTM_GATES, Checkpoint, ModelConfig
from .numerics import gelu, layer_norm, sigmoid, softmax

DEFAULT_MEMORY_WINDOW = 64


@dataclass
class LstmWeights:
    """Per-gate weight views for one LSTM cell."""

    W: dict[str, np.ndarray]
    V: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray], prefix: str) -> "LstmWeights":
        return cls(
            W={g: tensors[f"{prefix}.W_{g}"] for g in LSTM_GATES},
            V={g: tensors[f"{prefix}.V_{g}"] for g in LSTM_GATES},
            b={g: tensors[f"{prefix}.b_{g}"] for g in LSTM_GATES},
        )


@dataclass
class LnWeights:
    alpha: np.ndarray
    delta: np.ndarray

    @classmethod
    def from_tensors(cls, tensors, prefix: str) -> "LnWeights":
        return cls(alpha=tensors[f"{prefix}.alpha"], delta=tensors[f"{prefix}.delta"])


@dataclass
class ShaBlockWeights:
    ln_in: LnWeights
    lstm: LstmWeights
    ln_mem: LnWeights
    ln_out: LnWeights
    boom_W: np.ndarray
    boom_b: np.ndarray
    Wq: np.ndarray | None = None
    Wk: np.ndarray | None = None
    Wv: np.ndarray | None = None

    @classmethod
    def from_tensors(cls, tensors, k: int, has_attention: bool) -> "ShaBlockWeights":
        prefix = f"block.{k}"
        kwargs = {}
        if has_attention:
            kwargs = {
                "Wq": tensors[f"{prefix}.attn.Wq"],
                "Wk": tensors[f"{prefix}.attn.Wk"],
                "Wv": tensors[f"{prefix}.attn.Wv"],
            }
        return cls(
            ln_in=LnWeights.from_tensors(tensors, f"{prefix}.ln_in"),
            lstm=LstmWeights.from_tensors(tensors, f"{prefix}.lstm"),
            ln_mem=LnWeights.from_tensors(tensors, f"{prefix}.ln_mem"),
            ln_out=LnWeights.from_tensors(tensors, f"{prefix}.ln_out"),
            boom_W=tensors[f"{prefix}.boom.W"],
            boom_b=tensors[f"{prefix}.boom.b"],
            **kwargs,
        )


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, d_h: int) -> "LstmState":
        return cls(h=np.zeros(d_h), c=np.zeros(d_h))


class AttentionMemory:
    """Bounded FIFO of past layer-normed hidden states, one per processed position."""

    def __init__(self, window: int = DEFAULT_MEMORY_WINDOW):
        if window < 1:
            raise ValueError("memory window must be >= 1")
        self.window = window
        self.entries: list[np.ndarray] = []

    def append(self, m: np.ndarray) -> None:
        self.entries.append(m)
        if len(self.entries) > self.window:
            self.entries.pop(0)


def lstm_cell_step(weights: LstmWeights, x_t, h_prev, c_prev):
    """Standard LSTM recurrence; returns (h_t, c_t)."""
    pre = {g: weights.W[g] @ x_t + weights.V[g] @ h_prev + weights.b[g] for g in LSTM_GATES}
    f = sigmoid(pre["f"])
    i = sigmoid(pre["i"])
    g = np.tanh(pre["g"])
    o = sigmoid(pre["o"])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def boom_reduce(u: np.ndarray, d_h: int) -> np.ndarray:
    """Sum-reduce a widened Boom activation back to d_h (identity when sizes match)."""
    if u.shape[0] == d_h:
        return u
    return u.reshape(-1, d_h).sum(axis=0)


def attention_weights(q: np.ndarray, keys: list[np.ndarray], d_h: int) -> np.ndarray:
    scores = np.array([q @ k for k in keys]) / np.sqrt(d_h)
    return softmax(scores)


def sha_block_step(
    bw: ShaBlockWeights,
    x: np.ndarray,
    state: LstmState,
    memory: AttentionMemory,
    use_attention: bool,
    eps: float,
):
    """One SHA-RNN block step; returns (y, state', attention weights or None).

    Pipeline: LN -> LSTM -> (single-head attention over memory + residual, when
    enabled) -> LN -> Boom -> residual. The layer-normed hidden state is
    appended to the memory every step.
    """
    d_h = state.h.shape[0]
    a = layer_norm(x, bw.ln_in.alpha, bw.ln_in.delta, eps)
    h, c = lstm_cell_step(bw.lstm, a, state.h, state.c)
    m = layer_norm(h, bw.ln_mem.alpha, bw.ln_mem.delta, eps)
    memory.append(m)
    attn = None
    out = h
    if use_attention:
        q = bw.Wq @ m
        keys = [bw.Wk @ mj for mj in memory.entries]
        vals = [bw.Wv @ mj for mj in memory.entries]
        attn = attention_weights(q, keys, d_h)
        ctx = sum(w * v for w, v in zip(attn, vals))
        out = h + ctx
    bvec = layer_norm(out, bw.ln_out.alpha, bw.ln_out.delta, eps)
    u = gelu(bw.boom_W @ bvec + bw.boom_b)
    y = out + boom_reduce(u, d_h)
    return y, LstmState(h=h, c=c), attn


def _check_tokens(config: ModelConfig, tokens) -> None:
    for t in tokens:
        if not 0 <= t < config.vocab_size:
            raise ValueError(f"token id {t} out of range for vocab size {config.vocab_size}")


def decode_logits(ckpt: Checkpoint, h: np.ndarray) -> np.ndarray:
    return ckpt.decoder_weight() @ h + ckpt.tensors["decoder.b"]


def forward(
    ckpt: Checkpoint,
    tokens: list[int],
    window: int = DEFAULT_MEMORY_WINDOW,
    collect: bool = False,
):
    """Causal forward pass; one logit vector per position.

    With ``collect=True`` also returns a trace: per position the list of
    layer/block outputs and (for SHA-RNN) the attention weights.
    """
    config = ckpt.config
    _check_tokens(config, tokens)
    embed = ckpt.tensors["embed.W"]
    d_h = config.hidden_size

    logits: list[np.ndarray] = []
    trace: list[dict] = []

    if config.arch == "lstm":
        layers = [LstmWeights.from_tensors(ckpt.tensors, f"lstm.{i}") for i in range(config.num_layers)]
        states = [LstmState.zeros(d_h) for _ in layers]
        for tok in tokens:
            x = embed[tok]
            outs = []
            for i, lw in enumerate(layers):
                h, c = lstm_cell_step(lw, x, states[i].h, states[i].c)
                states[i] = LstmState(h=h, c=c)
                outs.append(h)
                x = h
            logits.append(decode_logits(ckpt, x))
            trace.append({"layers": outs, "attn": None})
    else:
        blocks = [
            ShaBlockWeights.from_tensors(ckpt.tensors, k, k == config.attention_block_index)
            for k in range(config.num_layers)
        ]
        states = [LstmState.zeros(d_h) for _ in blocks]
        memories = [AttentionMemory(window) for _ in blocks]
        for tok in tokens:
            x = embed[tok]
            outs = []
            attn_last = None
            for k, bw in enumerate(blocks):
                use_attention = k == config.attention_block_index
                y, states[k], attn = sha_block_step(
                    bw, x, states[k], memories[k], use_attention, config.layer_norm_eps
                )
                if attn is not None:
                    attn_last = attn
                outs.append(y)
                x = y
            logits.append(decode_logits(ckpt, x))
            trace.append({"layers": outs, "attn": attn_last})

    if collect:
        return logits, trace
    return logits


def perplexity(ckpt: Checkpoint, tokens: list[int], window: int = DEFAULT_MEMORY_WINDOW) -> float:
    """exp(mean NLL) of next-token predictions over the stream, natural log."""
    if len(tokens) < 2:
        raise ValueError("perplexity needs a stream of at least 2 tokens")
    logits = forward(ckpt, tokens, window=window)
    nll = 0.0
    for t in range(1, len(tokens)):
        probs = softmax(logits[t - 1])
        nll -= np.log(probs[tokens[t]])
    return float(np.exp(nll / (len(tokens) - 1)))
