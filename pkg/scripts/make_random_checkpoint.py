"""Write a random-weight checkpoint with a lexicon-derived vocabulary.

Useful for exercising the CLI end to end without a trained model.
"""

import pathlib
import sys

import click

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from cdlens import ModelConfig, random_checkpoint, save_checkpoint
from cdlens.corpus import build_vocab, load_lexicon


@click.command()
@click.option("--arch", type=click.Choice(["lstm", "sha-rnn"]), default="lstm", show_default=True)
@click.option("--language", type=click.Choice(["en", "nl"]), default="en", show_default=True)
@click.option("--num-layers", type=int, default=2, show_default=True)
@click.option("--hidden-size", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def main(arch, language, num_layers, hidden_size, seed, out):
    vocab = build_vocab(load_lexicon(language))
    config = ModelConfig(
        arch=arch,
        num_layers=num_layers,
        hidden_size=hidden_size,
        embed_size=hidden_size,
        vocab_size=len(vocab),
    )
    ckpt = random_checkpoint(config, vocab, seed=seed)
    save_checkpoint(ckpt, out)
    click.echo(f"wrote {arch} checkpoint ({len(vocab)} tokens, d_h={hidden_size}) to {out}")


if __name__ == "__main__":
    main()
