"""Checkpoint interchange format: load, save, and eager validation.

The on-disk container is language neutral (see ``docs/checkpoint-format.md``):
an 8-byte header, a JSON manifest holding the model config, the vocabulary and
a tensor index, followed by one raw little-endian float64 blob. Tensors are
addressed by (byte offset, shape) into the blob, so a round trip is
bit-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import DEFAULT_LN_EPS

MAGIC = b"CDCK"
FORMAT_VERSION = 1

UNK_TOKEN = "<unk>"

LSTM_GATES = ("f", "i", "g", "o")


class CheckpointError(ValueError):
    """A checkpoint file or in-memory checkpoint violates the format contract."""


@dataclass(frozen=True)
class ModelConfig:
    arch: str  # "lstm" | "sha-rnn"
    num_layers: int  # stacked LSTM layers, or SHA-RNN blocks
    hidden_size: int
    embed_size: int
    vocab_size: int
    tied_embeddings: bool = True
    attention_block_index: int = 0  # sha-rnn only
    boom_size: int = 0  # sha-rnn only; 0 means hidden_size
    layer_norm_eps: float = DEFAULT_LN_EPS

    def __post_init__(self):
        if self.arch not in ("lstm", "sha-rnn"):
            raise CheckpointError(f"unknown architecture {self.arch!r}")
        for name in ("num_layers", "hidden_size", "embed_size", "vocab_size"):
            if getattr(self, name) <= 0:
                raise CheckpointError(f"config field {name} must be positive")
        if self.tied_embeddings and self.embed_size != self.hidden_size:
            raise CheckpointError(
                "tied embeddings require embed_size == hidden_size "
                f"(got {self.embed_size} != {self.hidden_size})"
            )
        if self.layer_norm_eps <= 0:
            raise CheckpointError("layer_norm_eps must be positive")
        if self.arch == "sha-rnn":
            if not 0 <= self.attention_block_index < self.num_layers:
                raise CheckpointError(
                    f"attention_block_index {self.attention_block_index} out of range "
                    f"for {self.num_layers} blocks"
                )
            if self.effective_boom_size % self.hidden_size != 0:
                raise CheckpointError(
                    f"boom_size {self.effective_boom_size} must be a multiple of "
                    f"hidden_size {self.hidden_size}"
                )

    @property
    def effective_boom_size(self) -> int:
        return self.boom_size if self.boom_size > 0 else self.hidden_size

    def layer_input_size(self, layer: int) -> int:
        return self.embed_size if layer == 0 else self.hidden_size

    def to_json(self) -> dict:
        return {
            "arch": self.arch,
            "num_layers": self.num_layers,
            "hidden_size": self.hidden_size,
            "embed_size": self.embed_size,
            "vocab_size": self.vocab_size,
            "tied_embeddings": self.tied_embeddings,
            "attention_block_index": self.attention_block_index,
            "boom_size": self.boom_size,
            "layer_norm_eps": self.layer_norm_eps,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise CheckpointError(f"bad config object: {exc}") from exc


def canonical_tensor_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """The exact tensor set (name -> shape) a checkpoint for ``config`` must hold."""
    d_h = config.hidden_size
    shapes: dict[str, tuple[int, ...]] = {
        "embed.W": (config.vocab_size, config.embed_size),
        "decoder.b": (config.vocab_size,),
    }
    if not config.tied_embeddings:
        shapes["decoder.W"] = (config.vocab_size, d_h)

    def lstm_shapes(prefix: str, d_in: int):
        for gate in LSTM_GATES:
            shapes[f"{prefix}.W_{gate}"] = (d_h, d_in)
            shapes[f"{prefix}.V_{gate}"] = (d_h, d_h)
            shapes[f"{prefix}.b_{gate}"] = (d_h,)

    if config.arch == "lstm":
        for i in range(config.num_layers):
            lstm_shapes(f"lstm.{i}", config.layer_input_size(i))
    else:
        for k in range(config.num_layers):
            d_in = config.layer_input_size(k)
            shapes[f"block.{k}.ln_in.alpha"] = (d_in,)
            shapes[f"block.{k}.ln_in.delta"] = (d_in,)
            lstm_shapes(f"block.{k}.lstm", d_in)
            shapes[f"block.{k}.ln_mem.alpha"] = (d_h,)
            shapes[f"block.{k}.ln_mem.delta"] = (d_h,)
            if k == config.attention_block_index:
                for p in ("Wq", "Wk", "Wv"):
                    shapes[f"block.{k}.attn.{p}"] = (d_h, d_h)
            shapes[f"block.{k}.ln_out.alpha"] = (d_h,)
            shapes[f"block.{k}.ln_out.delta"] = (d_h,)
            shapes[f"block.{k}.boom.W"] = (config.effective_boom_size, d_h)
            shapes[f"block.{k}.boom.b"] = (config.effective_boom_size,)
    return shapes


class Vocab:
    """Dense token <-> index table with a reserved unknown-token entry."""

    def __init__(self, tokens: list[str]):
        if UNK_TOKEN not in tokens:
            raise CheckpointError(f"vocabulary is missing the {UNK_TOKEN!r} entry")
        if len(set(tokens)) != len(tokens):
            raise CheckpointError("vocabulary contains duplicate tokens")
        self.tokens = list(tokens)
        self._index = {tok: i for i, tok in enumerate(tokens)}
        self.unk_id = self._index[UNK_TOKEN]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def encode(self, token: str) -> int:
        return self._index.get(token, self.unk_id)

    def encode_all(self, tokens: list[str]) -> list[int]:
        return [self.encode(t) for t in tokens]

    def decode(self, idx: int) -> str:
        return self.tokens[idx]


@dataclass
class Checkpoint:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    vocab: Vocab

    def validate(self) -> None:
        expected = canonical_tensor_shapes(self.config)
        missing = sorted(set(expected) - set(self.tensors))
        if missing:
            raise CheckpointError(f"missing tensor(s): {', '.join(missing)}")
        extra = sorted(set(self.tensors) - set(expected))
        if extra:
            raise CheckpointError(f"unknown tensor(s): {', '.join(extra)}")
        for name, shape in expected.items():
            actual = self.tensors[name].shape
            if actual != shape:
                raise CheckpointError(
                    f"tensor {name} has shape {actual}, expected {shape}"
                )
            if not np.all(np.isfinite(self.tensors[name])):
                raise CheckpointError(f"tensor {name} contains non-finite values")
        if len(self.vocab) != self.config.vocab_size:
            raise CheckpointError(
                f"vocab has {len(self.vocab)} entries, config says {self.config.vocab_size}"
            )

    def decoder_weight(self) -> np.ndarray:
        if self.config.tied_embeddings:
            return self.tensors["embed.W"]
        return self.tensors["decoder.W"]


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    ckpt.validate()
    names = sorted(ckpt.tensors)
    index = {}
    offset = 0
    chunks = []
    for name in names:
        arr = np.ascontiguousarray(ckpt.tensors[name], dtype="<f8")
        index[name] = {"offset": offset, "shape": list(arr.shape)}
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": ckpt.config.to_json(),
        "vocab": ckpt.vocab.tokens,
        "tensors": index,
    }
    payload = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        for chunk in chunks:
            fh.write(chunk)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    (manifest_len,) = struct.unpack("<I", raw[4:8])
    try:
        manifest = json.loads(raw[8 : 8 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: manifest parse error: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version!r}")
    config = ModelConfig.from_json(manifest["config"])
    vocab = Vocab(manifest["vocab"])
    blob = raw[8 + manifest_len :]
    tensors = {}
    for name, entry in manifest["tensors"].items():
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + count * 8
        if end > len(blob):
            raise CheckpointError(f"{path}: tensor {name} runs past end of blob")
        arr = np.frombuffer(blob[start:end], dtype="<f8").reshape(shape)
        tensors[name] = arr.astype(np.float64)
    ckpt = Checkpoint(config=config, tensors=tensors, vocab=vocab)
    ckpt.validate()
    return ckpt


def random_checkpoint(config: ModelConfig, vocab: Vocab, seed: int = 0, scale: float = 0.4) -> Checkpoint:
    """An untrained checkpoint with i.i.d. normal weights; used for baselines and tests."""
    rng = np.random.default_rng(seed)
    tensors = {
        name: rng.normal(0.0, scale, size=shape)
        for name, shape in canonical_tensor_shapes(config).items()
    }
    # Layer norm gains start near 1 so normalization behaves like the trained case.
    for name in tensors:
        if name.endswith(".alpha"):
            tensors[name] = 1.0 + 0.1 * rng.normal(size=tensors[name].shape)
    ckpt = Checkpoint(config=config, tensors=tensors, vocab=vocab)
    ckpt.validate()
    return ckpt
