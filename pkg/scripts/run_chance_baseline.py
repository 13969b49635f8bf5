"""Score untrained random-weight models on the NA and attribution tasks.

Sanity experiment: without training, both tasks should sit at chance level
(~50%), for both architectures. Writes one report CSV per architecture.
"""

import pathlib
import sys

import click

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from cdlens import ModelConfig, random_checkpoint
from cdlens.corpus import build_vocab, generate_corpus, load_lexicon
from cdlens.decompose import get_policy
from cdlens.evaluate import build_report, write_report_csv


@click.command()
@click.option("--language", type=click.Choice(["en", "nl"]), default="en", show_default=True)
@click.option("--template", default="NounPP", show_default=True)
@click.option("--limit", type=int, default=100, show_default=True, help="Items per condition.")
@click.option("--hidden-size", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=21, show_default=True)
@click.option("--policy", default="gcd-default", show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default="results", show_default=True)
def main(language, template, limit, hidden_size, seed, policy, out_dir):
    lexicon = load_lexicon(language)
    vocab = build_vocab(lexicon)
    items = generate_corpus(language, template, lexicon=lexicon, vocab=vocab, limit=limit, seed=seed)
    pol = get_policy(policy)
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for arch in ("lstm", "sha-rnn"):
        config = ModelConfig(
            arch=arch,
            num_layers=2,
            hidden_size=hidden_size,
            embed_size=hidden_size,
            vocab_size=len(vocab),
        )
        ckpt = random_checkpoint(config, vocab, seed=seed)
        report = build_report(ckpt, items, pol, model_id=f"random-{arch}-{seed}")
        n = sum(c.n for c in report.cells.values())
        na = 100.0 * sum(c.na_correct for c in report.cells.values()) / n
        attr = 100.0 * sum(c.attr_correct for c in report.cells.values()) / n
        path = out / f"chance_{arch}.csv"
        write_report_csv(report, path)
        click.echo(f"{arch:8s} n={n} NA={na:.1f}% attribution={attr:.1f}% -> {path}")


if __name__ == "__main__":
    main()
