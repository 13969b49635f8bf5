"""Compare externally produced probe logits against this package's forward pass.

Consumes a JSON file of the shape

    {"sentences": [["The", "boy", ...], ...],
     "logits": [[...last-position logit vector...], ...]}

as emitted by an external trainer alongside its exported checkpoint, and
verifies the checkpoint reproduces those logits (relative tolerance for
float32-trained weights). Exit code 0 on parity, 1 on mismatch.
"""

import json
import pathlib
import sys

import click
import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from cdlens import load_checkpoint
from cdlens.models import forward


@click.command()
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--probes", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--rtol", type=float, default=1e-4, show_default=True)
def main(checkpoint, probes, rtol):
    ckpt = load_checkpoint(checkpoint)
    with open(probes, encoding="utf-8") as fh:
        data = json.load(fh)
    sentences = data["sentences"]
    expected = data["logits"]
    if len(sentences) != len(expected):
        raise click.ClickException("sentences and logits differ in length")
    worst = 0.0
    for sent, ref in zip(sentences, expected):
        ids = ckpt.vocab.encode_all(sent)
        got = forward(ckpt, ids)[-1]
        ref = np.asarray(ref, dtype=float)
        err = float(np.max(np.abs(got - ref) / (np.abs(ref) + 1e-12)))
        worst = max(worst, err)
        if not np.allclose(got, ref, rtol=rtol, atol=1e-6):
            click.echo(f"parity FAILED on {' '.join(sent)!r}: max rel err {err:.2e}", err=True)
            sys.exit(1)
    click.echo(f"parity OK over {len(sentences)} probes (worst rel err {worst:.2e})")


if __name__ == "__main__":
    main()
