import pytest

from cdlens import ModelConfig, Vocab, random_checkpoint
from cdlens.corpus import build_vocab, load_lexicon


@pytest.fixture(scope="session")
def en_lexicon():
    return load_lexicon("en")


@pytest.fixture(scope="session")
def nl_lexicon():
    return load_lexicon("nl")


@pytest.fixture(scope="session")
def en_vocab(en_lexicon):
    return build_vocab(en_lexicon)


def tiny_vocab(n: int = 12) -> Vocab:
    return Vocab(["<unk>"] + [f"w{i}" for i in range(n - 1)])


def make_checkpoint(arch, d_h=8, seed=0, vocab=None, num_layers=2, **kwargs):
    vocab = vocab or tiny_vocab()
    config = ModelConfig(
        arch=arch,
        num_layers=num_layers,
        hidden_size=d_h,
        embed_size=d_h,
        vocab_size=len(vocab),
        **kwargs,
    )
    return random_checkpoint(config, vocab, seed=seed)


@pytest.fixture
def small_lstm():
    return make_checkpoint("lstm", d_h=8, seed=1)


@pytest.fixture
def small_sha():
    return make_checkpoint("sha-rnn", d_h=8, seed=2, attention_block_index=0)
