"""Decomposed forward passes: propagate (beta, gamma) pairs through both models.

Every activation is split into a part traceable to the relevant token span
(beta) and everything else (gamma), with beta + gamma reconstructing the plain
forward pass. Gates and other nonlinearities over sums are factorized with
exact Shapley values; layer norm and softmax use the strict-separation rules
(beta output depends on beta input only); multiplications expand into cross
terms assigned by an interaction policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import LSTM_GATES, Checkpoint
from .models import (
    DEFAULT_MEMORY_WINDOW,
    LstmWeights,
    LnWeights,
    ShaBlockWeights,
    boom_reduce,
)
from .numerics import layer_norm, softmax
from .shapley import SumGame, exact_shapley

GATE_NONLINEARITY = {"f": "sigmoid", "i": "sigmoid", "g": "tanh", "o": "sigmoid"}


@dataclass
class DecomposedPair:
    """A (beta, gamma) split of one activation vector; beta + gamma == the full value."""

    beta: np.ndarray
    gamma: np.ndarray

    @classmethod
    def zeros(cls, dim: int) -> "DecomposedPair":
        return cls(beta=np.zeros(dim), gamma=np.zeros(dim))

    @classmethod
    def from_vector(cls, v: np.ndarray, relevant: bool) -> "DecomposedPair":
        zero = np.zeros_like(v)
        return cls(beta=v, gamma=zero) if relevant else cls(beta=zero, gamma=v)

    @property
    def total(self) -> np.ndarray:
        return self.beta + self.gamma

    def __add__(self, other: "DecomposedPair") -> "DecomposedPair":
        # Addition is linear: no interaction terms.
        return DecomposedPair(beta=self.beta + other.beta, gamma=self.gamma + other.gamma)

    def map_linear(self, matrix: np.ndarray) -> "DecomposedPair":
        return DecomposedPair(beta=matrix @ self.beta, gamma=matrix @ self.gamma)


@dataclass
class SourceSplit:
    """A factor of a multiplication, split by contribution source.

    ``rel`` holds relevant-sourced content, ``neutral`` the input-independent
    operating point (the sigma(0) baseline), ``irrel`` everything else. A
    plain DecomposedPair maps to (beta, 0, gamma).
    """

    rel: np.ndarray
    neutral: np.ndarray
    irrel: np.ndarray

    @classmethod
    def from_pair(cls, pair: DecomposedPair) -> "SourceSplit":
        return cls(rel=pair.beta, neutral=np.zeros_like(pair.beta), irrel=pair.gamma)

    def to_pair(self, policy: "InteractionPolicy") -> DecomposedPair:
        if policy.baseline_to == "beta":
            return DecomposedPair(beta=self.rel + self.neutral, gamma=self.irrel.copy())
        return DecomposedPair(beta=self.rel.copy(), gamma=self.irrel + self.neutral)


def split_mul(a: SourceSplit, b: SourceSplit, policy: "InteractionPolicy") -> DecomposedPair:
    """Elementwise product with the full 3x3 cross-term expansion.

    Relevant content stays relevant when multiplied by relevant or neutral
    factors (gates carry the state they modulate); any product touching an
    irrelevant source goes to gamma; the pure neutral x neutral term follows
    the policy's baseline assignment. The nine terms partition the full
    product exactly.
    """
    beta = a.rel * b.rel + a.rel * b.neutral + a.neutral * b.rel
    neutral = a.neutral * b.neutral
    gamma = (
        a.rel * b.irrel
        + a.irrel * b.rel
        + a.irrel * b.neutral
        + a.neutral * b.irrel
        + a.irrel * b.irrel
    )
    if policy.baseline_to == "beta":
        beta = beta + neutral
    else:
        gamma = gamma + neutral
    return DecomposedPair(beta=beta, gamma=gamma)


@dataclass(frozen=True)
class RelevantSpan:
    """Half-open token range [start, end) whose contribution is measured."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span [{self.start}, {self.end})")

    def __contains__(self, position: int) -> bool:
        return self.start <= position < self.end


@dataclass(frozen=True)
class InteractionPolicy:
    """Rule assigning Shapley contributions and cross products to beta or gamma.

    ``beta`` and in-span input are always relevant sources; ``bias_relevant``
    adds gate bias contributions to the relevant side (the murdoch preset);
    the standalone sigma(0) baseline follows ``baseline_to``. In products,
    relevant content survives multiplication by relevant or neutral
    (baseline) factors; any irrelevant factor sends the term to gamma (see
    ``split_mul``).
    """

    name: str
    bias_relevant: bool
    baseline_to: str = "gamma"

    def __post_init__(self):
        if self.baseline_to not in ("beta", "gamma"):
            raise ValueError(f"baseline_to must be beta or gamma, got {self.baseline_to!r}")

    @property
    def relevant_product_sources(self) -> frozenset[str]:
        base = {"beta", "input-in-span"}
        if self.bias_relevant:
            base.add("bias")
        return frozenset(base)


GCD_DEFAULT = InteractionPolicy(name="gcd-default", bias_relevant=False, baseline_to="gamma")
MURDOCH = InteractionPolicy(name="murdoch", bias_relevant=True, baseline_to="gamma")

POLICIES = {p.name: p for p in (GCD_DEFAULT, MURDOCH)}


def get_policy(name: str) -> InteractionPolicy:
    try:
        return POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}, expected one of {sorted(POLICIES)}")


def _split_contributions(
    contributions: dict[str, np.ndarray],
    baseline: np.ndarray,
    input_in_span: bool,
    policy: InteractionPolicy,
) -> SourceSplit:
    """Fold Shapley contributions into (relevant, baseline, irrelevant) parts."""
    rel = np.zeros_like(baseline)
    irrel = np.zeros_like(baseline)
    for name, phi in contributions.items():
        if name == "beta" or (name == "input" and input_in_span) or (
            name == "bias" and policy.bias_relevant
        ):
            rel = rel + phi
        else:
            irrel = irrel + phi
    return SourceSplit(rel=rel, neutral=baseline.copy(), irrel=irrel)


def _decompose_gate(
    weights: LstmWeights,
    gate: str,
    x,
    pair_h: DecomposedPair,
    policy: InteractionPolicy,
    x_in_span: bool,
) -> SourceSplit:
    W, V, b = weights.W[gate], weights.V[gate], weights.b[gate]
    if isinstance(x, DecomposedPair):
        # Upper layers: the input is already decomposed, so its beta/gamma
        # parts join the recurrent beta/gamma players.
        components = [
            ("beta", W @ x.beta + V @ pair_h.beta),
            ("gamma", W @ x.gamma + V @ pair_h.gamma),
            ("bias", b),
        ]
    else:
        components = [
            ("input", W @ x),
            ("beta", V @ pair_h.beta),
            ("gamma", V @ pair_h.gamma),
            ("bias", b),
        ]
    contributions, baseline = exact_shapley(SumGame(components, GATE_NONLINEARITY[gate]))
    return _split_contributions(contributions, baseline, x_in_span, policy)


def decompose_lstm_step(
    weights: LstmWeights,
    x,
    pair_h: DecomposedPair,
    pair_c: DecomposedPair,
    policy: InteractionPolicy,
    x_in_span: bool = False,
) -> tuple[DecomposedPair, DecomposedPair]:
    """One decomposed LSTM cell step; returns (pair_h', pair_c').

    ``x`` is either a raw input vector (bottom layer; labeled in- or
    out-of-span via ``x_in_span``) or a DecomposedPair from the layer below.
    """
    gates = {
        g: _decompose_gate(weights, g, x, pair_h, policy, x_in_span) for g in LSTM_GATES
    }
    pair_c_next = split_mul(gates["f"], SourceSplit.from_pair(pair_c), policy) + split_mul(
        gates["i"], gates["g"], policy
    )
    tanh_contribs, tanh_baseline = exact_shapley(
        SumGame([("beta", pair_c_next.beta), ("gamma", pair_c_next.gamma)], "tanh")
    )
    tanh_split = _split_contributions(tanh_contribs, tanh_baseline, False, policy)
    pair_h_next = split_mul(gates["o"], tanh_split, policy)
    return pair_h_next, pair_c_next


def decompose_layer_norm(
    pair: DecomposedPair, ln: LnWeights, eps: float
) -> DecomposedPair:
    """Strict-separation layer norm: beta' = LN(beta) - delta, gamma' takes the rest."""
    ln_beta = layer_norm(pair.beta, ln.alpha, ln.delta, eps)
    ln_full = layer_norm(pair.total, ln.alpha, ln.delta, eps)
    beta = ln_beta - ln.delta
    gamma = ln_full - ln_beta + ln.delta
    return DecomposedPair(beta=beta, gamma=gamma)


def decompose_softmax(pair: DecomposedPair) -> DecomposedPair:
    """Strict-separation softmax: beta' = Softmax(beta), gamma' = Softmax(beta+gamma) - beta'."""
    beta = softmax(pair.beta)
    gamma = softmax(pair.total) - beta
    return DecomposedPair(beta=beta, gamma=gamma)


def decompose_attention(
    bw: ShaBlockWeights,
    pair_m: DecomposedPair,
    memory_pairs: list[DecomposedPair],
    policy: InteractionPolicy,
) -> DecomposedPair:
    """Decomposed single-head attention over a memory of decomposed states.

    Scores expand the bilinear q.k form into beta/gamma cross terms, weights
    go through the strict-separation softmax, and the context vector applies
    the product rule to decomposed weights x decomposed values.
    """
    d_h = pair_m.beta.shape[0]
    scale = 1.0 / np.sqrt(d_h)
    q = pair_m.map_linear(bw.Wq)
    keys = [mp.map_linear(bw.Wk) for mp in memory_pairs]
    vals = [mp.map_linear(bw.Wv) for mp in memory_pairs]
    score_beta = np.array([q.beta @ k.beta for k in keys]) * scale
    score_total = np.array([q.total @ k.total for k in keys]) * scale
    scores = DecomposedPair(beta=score_beta, gamma=score_total - score_beta)
    weights = decompose_softmax(scores)
    dim = vals[0].beta.shape[0]
    ctx = DecomposedPair.zeros(dim)
    for j, v in enumerate(vals):
        w_j = DecomposedPair(
            beta=np.full(dim, weights.beta[j]), gamma=np.full(dim, weights.gamma[j])
        )
        ctx = ctx + split_mul(SourceSplit.from_pair(w_j), SourceSplit.from_pair(v), policy)
    return ctx


def decompose_boom(
    bw: ShaBlockWeights, pair: DecomposedPair, policy: InteractionPolicy, d_h: int
) -> DecomposedPair:
    """Decomposed Boom sublayer: affine split linearly, GELU Shapley-factorized."""
    components = [
        ("beta", bw.boom_W @ pair.beta),
        ("gamma", bw.boom_W @ pair.gamma),
        ("bias", bw.boom_b),
    ]
    contributions, baseline = exact_shapley(SumGame(components, "gelu"))
    u = _split_contributions(contributions, baseline, False, policy).to_pair(policy)
    return DecomposedPair(beta=boom_reduce(u.beta, d_h), gamma=boom_reduce(u.gamma, d_h))


def decompose_sha_block_step(
    bw: ShaBlockWeights,
    x,
    pair_h: DecomposedPair,
    pair_c: DecomposedPair,
    memory_pairs: list[DecomposedPair],
    use_attention: bool,
    policy: InteractionPolicy,
    eps: float,
    window: int,
    x_in_span: bool = False,
):
    """One decomposed SHA-RNN block step; mirrors models.sha_block_step exactly."""
    if not isinstance(x, DecomposedPair):
        x = DecomposedPair.from_vector(x, x_in_span)
    d_h = pair_h.beta.shape[0]
    a = decompose_layer_norm(x, bw.ln_in, eps)
    pair_h_next, pair_c_next = decompose_lstm_step(bw.lstm, a, pair_h, pair_c, policy)
    m = decompose_layer_norm(pair_h_next, bw.ln_mem, eps)
    memory_pairs.append(m)
    if len(memory_pairs) > window:
        memory_pairs.pop(0)
    out = pair_h_next
    if use_attention:
        ctx = decompose_attention(bw, m, memory_pairs, policy)
        out = out + ctx
    bvec = decompose_layer_norm(out, bw.ln_out, eps)
    u = decompose_boom(bw, bvec, policy, d_h)
    y = out + u
    return y, pair_h_next, pair_c_next


def _decode_pair(ckpt: Checkpoint, pair: DecomposedPair) -> DecomposedPair:
    # Decoder bias is input-independent; it always lands in gamma.
    W = ckpt.decoder_weight()
    return DecomposedPair(
        beta=W @ pair.beta, gamma=W @ pair.gamma + ckpt.tensors["decoder.b"]
    )


def decomposed_forward(
    ckpt: Checkpoint,
    tokens: list[int],
    span: RelevantSpan,
    policy: InteractionPolicy = GCD_DEFAULT,
    window: int = DEFAULT_MEMORY_WINDOW,
    collect: bool = False,
):
    """Decomposed causal forward pass; one logit DecomposedPair per position.

    The span may extend past the processed prefix; positions outside it are
    labeled irrelevant.
    """
    config = ckpt.config
    embed = ckpt.tensors["embed.W"]
    d_h = config.hidden_size
    logits: list[DecomposedPair] = []
    trace: list[dict] = []

    if config.arch == "lstm":
        layers = [
            LstmWeights.from_tensors(ckpt.tensors, f"lstm.{i}")
            for i in range(config.num_layers)
        ]
        pairs_h = [DecomposedPair.zeros(d_h) for _ in layers]
        pairs_c = [DecomposedPair.zeros(d_h) for _ in layers]
        for t, tok in enumerate(tokens):
            in_span = t in span
            x = embed[tok]
            outs = []
            for i, lw in enumerate(layers):
                pairs_h[i], pairs_c[i] = decompose_lstm_step(
                    lw, x, pairs_h[i], pairs_c[i], policy, x_in_span=in_span
                )
                outs.append(pairs_h[i])
                x = pairs_h[i]
            logits.append(_decode_pair(ckpt, x))
            trace.append({"layers": outs})
    else:
        blocks = [
            ShaBlockWeights.from_tensors(ckpt.tensors, k, k == config.attention_block_index)
            for k in range(config.num_layers)
        ]
        pairs_h = [DecomposedPair.zeros(d_h) for _ in blocks]
        pairs_c = [DecomposedPair.zeros(d_h) for _ in blocks]
        memories: list[list[DecomposedPair]] = [[] for _ in blocks]
        for t, tok in enumerate(tokens):
            in_span = t in span
            x = embed[tok]
            outs = []
            for k, bw in enumerate(blocks):
                y, pairs_h[k], pairs_c[k] = decompose_sha_block_step(
                    bw,
                    x,
                    pairs_h[k],
                    pairs_c[k],
                    memories[k],
                    k == config.attention_block_index,
                    policy,
                    config.layer_norm_eps,
                    window,
                    x_in_span=in_span,
                )
                outs.append(y)
                x = y
            logits.append(_decode_pair(ckpt, x))
            trace.append({"layers": outs})

    if collect:
        return logits, trace
    return logits


def logit_attribution(
    decomposed_logits: list[DecomposedPair], position: int, token_id: int
) -> float:
    """The relevant span's contribution to one logit: beta at (position, token)."""
    if not 0 <= position < len(decomposed_logits):
        raise IndexError(f"position {position} out of range")
    pair = decomposed_logits[position]
    if not 0 <= token_id < pair.beta.shape[0]:
        raise IndexError(f"token id {token_id} out of range")
    return float(pair.beta[token_id])
