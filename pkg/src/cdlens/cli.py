"""Command-line entry point. Every run writing an output file also writes a
JSON manifest sidecar (<out>.manifest.json) capturing the command, flags,
checkpoint hash and tool version, so runs are reproducible and diffable.

Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import hashlib
import json
import sys

import click
import numpy as np

from . import __version__
from .checkpoint import MAGIC, Checkpoint, CheckpointError, Vocab, load_checkpoint
from .corpus import (
    CorpusError,
    TEMPLATES,
    build_vocab,
    generate_corpus,
    load_lexicon,
    read_corpus,
    write_corpus,
)
from .decompose import RelevantSpan, decomposed_forward, get_policy
from .evaluate import (
    aggregate_attributions,
    build_report,
    na_accuracy,
    write_na_csv,
    write_report_csv,
    write_slot_csv,
)
from .models import forward, perplexity

EXIT_VALIDATION = 1
EXIT_IO = 2


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map domain errors to exit 1 and I/O errors to exit 2."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (CheckpointError, CorpusError, ValueError, IndexError) as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except OSError as exc:
            _fail(EXIT_IO, str(exc))

    wrapper.__name__ = fn.__name__
    return wrapper


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: str, command: str, flags: dict, checkpoint: str | None = None):
    manifest = {
        "command": command,
        "flags": {k: v for k, v in sorted(flags.items()) if v is not None},
        "tool_version": __version__,
    }
    if checkpoint is not None:
        manifest["checkpoint_sha256"] = _sha256(checkpoint)
    with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_vocab_file(path: str) -> Vocab:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return load_checkpoint(path).vocab
    with open(path, encoding="utf-8") as fh:
        return Vocab([line.strip() for line in fh if line.strip()])


def _load_config_defaults(ctx, param, value):
    if value is None:
        return None
    with open(value, encoding="utf-8") as fh:
        defaults = json.load(fh)
    ctx.default_map = ctx.default_map or {}
    ctx.default_map.update(defaults)
    return value


@click.group()
@click.version_option(version=__version__)
def main():
    """Contextual-decomposition attributions for small LSTM / SHA-RNN LMs."""


_config_option = click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config_defaults,
    is_eager=True,
    expose_value=False,
    help="JSON file with default values for the flags of this command.",
)


@main.command("generate")
@_config_option
@click.option("--language", type=click.Choice(["en", "nl"]), required=True)
@click.option("--template", type=click.Choice(sorted(TEMPLATES)), required=True)
@click.option("--limit", type=int, default=10, show_default=True, help="Items per condition.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_guarded
def cmd_generate(language, template, limit, seed, lexicon_path, vocab_path, out):
    """Generate a synthetic number-agreement corpus."""
    lexicon = load_lexicon(language, lexicon_path)
    vocab = _load_vocab_file(vocab_path) if vocab_path else build_vocab(lexicon)
    items = generate_corpus(language, template, lexicon, vocab, limit=limit, seed=seed)
    write_corpus(items, out)
    _write_manifest(
        out,
        "generate",
        {
            "language": language,
            "template": template,
            "limit": limit,
            "seed": seed,
            "lexicon": lexicon_path,
            "vocab": vocab_path,
        },
    )
    click.echo(f"wrote {len(items)} items to {out}")


@main.command("eval-na")
@_config_option
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@_guarded
def cmd_eval_na(checkpoint, corpus, out, jobs):
    """Score number-agreement accuracy; write a per-condition CSV."""
    ckpt = load_checkpoint(checkpoint)
    items = read_corpus(corpus)
    cells = na_accuracy(ckpt, items, jobs=jobs)
    write_na_csv(cells, out)
    _write_manifest(out, "eval-na", {"checkpoint": checkpoint, "corpus": corpus, "jobs": jobs}, checkpoint)
    click.echo(f"wrote {len(cells)} rows to {out}")


@main.command("attribute")
@_config_option
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--policy", type=click.Choice(["gcd-default", "murdoch"]), default="gcd-default", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--per-slot", "per_slot", type=click.Path(dir_okay=False), help="Also write a per-slot mean attribution CSV (requires a single-template corpus).")
@click.option("--jobs", type=int, default=1, show_default=True)
@_guarded
def cmd_attribute(checkpoint, corpus, policy, out, per_slot, jobs):
    """Run NA and subject-attribution scoring; write a report CSV."""
    ckpt = load_checkpoint(checkpoint)
    items = read_corpus(corpus)
    pol = get_policy(policy)
    report = build_report(ckpt, items, pol, model_id=_sha256(checkpoint)[:12], jobs=jobs)
    write_report_csv(report, out)
    flags = {"checkpoint": checkpoint, "corpus": corpus, "policy": policy, "jobs": jobs}
    _write_manifest(out, "attribute", flags, checkpoint)
    if report.has_ties:
        click.echo("warning: attribution comparisons contained ties (counted incorrect)", err=True)
    if per_slot:
        rows = aggregate_attributions(ckpt, items, pol)
        write_slot_csv(rows, per_slot)
        _write_manifest(per_slot, "attribute --per-slot", flags, checkpoint)
    click.echo(f"wrote {len(report.cells)} rows to {out}")


def _parse_span(text: str) -> RelevantSpan:
    try:
        start, end = text.split(":")
        return RelevantSpan(int(start), int(end))
    except (ValueError, TypeError):
        raise ValueError(f"bad span {text!r}, expected start:end")


@main.command("decompose")
@_config_option
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--sentence", type=str, required=True, help="Whitespace-tokenized input.")
@click.option("--span", type=str, required=True, help="Relevant token span start:end (half open).")
@click.option("--policy", type=click.Choice(["gcd-default", "murdoch"]), default="gcd-default", show_default=True)
@click.option("--target", type=str, help="Report logits for this token (default: the next token at each position).")
@_guarded
def cmd_decompose(checkpoint, sentence, span, policy, target):
    """Print the per-token beta/gamma logit decomposition of one sentence."""
    ckpt = load_checkpoint(checkpoint)
    tokens = sentence.split()
    if not tokens:
        raise ValueError("empty sentence")
    ids = ckpt.vocab.encode_all(tokens)
    rel_span = _parse_span(span)
    pol = get_policy(policy)
    pairs = decomposed_forward(ckpt, ids, rel_span, pol)
    full = forward(ckpt, ids)
    click.echo(f"policy={pol.name} span=[{rel_span.start},{rel_span.end})")
    click.echo(f"{'pos':>3} {'token':<15} {'target':<15} {'beta':>12} {'gamma':>12} {'full':>12} {'recon_err':>10}")
    for t, tok in enumerate(tokens):
        if target is not None:
            tgt_tok = target
        elif t + 1 < len(tokens):
            tgt_tok = tokens[t + 1]
        else:
            tgt_tok = ckpt.vocab.decode(int(np.argmax(full[t])))
        tgt = ckpt.vocab.encode(tgt_tok)
        recon = float(np.max(np.abs(pairs[t].beta + pairs[t].gamma - full[t])))
        click.echo(
            f"{t:>3} {tok:<15} {tgt_tok:<15} "
            f"{pairs[t].beta[tgt]:>12.6f} {pairs[t].gamma[tgt]:>12.6f} "
            f"{full[t][tgt]:>12.6f} {recon:>10.2e}"
        )


@main.command("perplexity")
@_config_option
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--tokens", "tokens_path", type=click.Path(exists=True, dir_okay=False), required=True, help="Whitespace-separated token stream.")
@_guarded
def cmd_perplexity(checkpoint, tokens_path):
    """Print the perplexity of a token stream under the model."""
    ckpt = load_checkpoint(checkpoint)
    with open(tokens_path, encoding="utf-8") as fh:
        tokens = fh.read().split()
    ids = ckpt.vocab.encode_all(tokens)
    click.echo(f"{perplexity(ckpt, ids):.6f}")


if __name__ == "__main__":
    main()
