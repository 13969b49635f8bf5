/** CLI: train a toy model on a corpus file and export an interchange checkpoint.
 *
 *   tsx src/cli.ts train --corpus corpus.tsv --out model.cdck [--probes probes.json]
 *   tsx src/cli.ts convert --in weights.json --out model.cdck [--map old=new ...]
 */

import { readFileSync, writeFileSync } from "node:fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { parseCorpus } from "./corpus.js";
import { CheckpointConfig, NamedTensor } from "./export.js";
import { convertCheckpoint, exportModel } from "./convert.js";
import { DEFAULT_TRAIN_CONFIG, naAccuracy, probeLogits, train } from "./train.js";

function runTrain(argv: {
  corpus: string;
  out: string;
  probes?: string;
  epochs: number;
  lr: number;
  hiddenSize: number;
  seed: number;
  holdout: number;
}): void {
  const items = parseCorpus(readFileSync(argv.corpus, "utf-8"));
  const held = items.filter((_, i) => i % argv.holdout === 0);
  const trainItems = items.filter((_, i) => i % argv.holdout !== 0);
  const { model, vocab, losses } = train(
    trainItems,
    {
      ...DEFAULT_TRAIN_CONFIG,
      epochs: argv.epochs,
      learningRate: argv.lr,
      hiddenSize: argv.hiddenSize,
      seed: argv.seed,
    },
    (epoch, loss) => {
      if (epoch % 25 === 0) console.log(`epoch ${epoch}: loss ${loss.toFixed(4)}`);
    }
  );
  console.log(`final loss ${losses[losses.length - 1].toFixed(4)}`);
  console.log(`held-out NA accuracy: ${(100 * naAccuracy(model, vocab, held)).toFixed(1)}%`);
  writeFileSync(argv.out, exportModel(model, vocab));
  console.log(`wrote checkpoint to ${argv.out}`);
  if (argv.probes) {
    writeFileSync(argv.probes, JSON.stringify(probeLogits(model, vocab, held.slice(0, 100))));
    console.log(`wrote probe logits to ${argv.probes}`);
  }
}

interface WeightsFile {
  config: CheckpointConfig;
  vocab: string[];
  tensors: Record<string, { shape: number[]; values: number[] }>;
}

function runConvert(argv: { in: string; out: string; map: string[] }): void {
  const parsed: WeightsFile = JSON.parse(readFileSync(argv.in, "utf-8"));
  const source = new Map<string, NamedTensor>();
  for (const [name, t] of Object.entries(parsed.tensors)) {
    source.set(name, { shape: t.shape, values: Float64Array.from(t.values) });
  }
  const mapping: Record<string, string> = {};
  for (const pair of argv.map) {
    const [from, to] = pair.split("=");
    if (!from || !to) throw new Error(`bad --map entry ${pair}, expected old=new`);
    mapping[from] = to;
  }
  writeFileSync(argv.out, convertCheckpoint(parsed.config, parsed.vocab, source, mapping));
  console.log(`wrote checkpoint to ${argv.out}`);
}

yargs(hideBin(process.argv))
  .command(
    "train",
    "train a toy LSTM LM and export a checkpoint",
    (y) =>
      y
        .option("corpus", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("probes", { type: "string" })
        .option("epochs", { type: "number", default: DEFAULT_TRAIN_CONFIG.epochs })
        .option("lr", { type: "number", default: DEFAULT_TRAIN_CONFIG.learningRate })
        .option("hidden-size", { type: "number", default: DEFAULT_TRAIN_CONFIG.hiddenSize })
        .option("seed", { type: "number", default: DEFAULT_TRAIN_CONFIG.seed })
        .option("holdout", {
          type: "number",
          default: 5,
          describe: "hold out every Nth item for evaluation",
        }),
    (argv) => runTrain(argv as never)
  )
  .command(
    "convert",
    "rename framework weights to canonical names and serialize",
    (y) =>
      y
        .option("in", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("map", { type: "array", default: [], string: true }),
    (argv) => runConvert(argv as never)
  )
  .demandCommand(1)
  .strict()
  .parse();
