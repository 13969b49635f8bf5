/** Full-batch Adam training of the toy LSTM LM on a corpus file. */

import * as tf from "@tensorflow/tfjs";

import { CorpusItem, buildVocab, encoder, sentences } from "./corpus.js";
import { LstmLm, createModel, lastLogits, loss, trainableVariables } from "./model.js";

export interface TrainConfig {
  numLayers: number;
  hiddenSize: number;
  epochs: number;
  learningRate: number;
  seed: number;
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
  numLayers: 2,
  hiddenSize: 32,
  epochs: 150,
  learningRate: 0.02,
  seed: 0,
};

export interface TrainResult {
  model: LstmLm;
  vocab: string[];
  losses: number[];
}

export function train(
  items: CorpusItem[],
  config: TrainConfig = DEFAULT_TRAIN_CONFIG,
  onEpoch?: (epoch: number, loss: number) => void
): TrainResult {
  const vocab = buildVocab(items);
  const encode = encoder(vocab);
  const seqs = sentences(items);
  const length = seqs[0].length;
  for (const s of seqs) {
    if (s.length !== length) throw new Error("training sentences differ in length");
  }
  const ids = seqs.map((s) => s.map(encode));
  const batch = tf.tensor2d(ids, [ids.length, length], "int32");

  const model = createModel(
    { numLayers: config.numLayers, hiddenSize: config.hiddenSize, vocabSize: vocab.length },
    config.seed
  );
  const optimizer = tf.train.adam(config.learningRate);
  const vars = trainableVariables(model);
  const losses: number[] = [];
  for (let epoch = 0; epoch < config.epochs; epoch++) {
    const value = optimizer.minimize(() => loss(model, batch), true, vars)!;
    const current = value.dataSync()[0];
    value.dispose();
    if (!Number.isFinite(current)) {
      throw new Error(`training diverged: loss is ${current} at epoch ${epoch}`);
    }
    losses.push(current);
    onEpoch?.(epoch, current);
  }
  batch.dispose();
  optimizer.dispose();
  return { model, vocab, losses };
}

/** Fraction of items whose congruent verb logit beats the incongruent one. */
export function naAccuracy(model: LstmLm, vocab: string[], items: CorpusItem[]): number {
  const encode = encoder(vocab);
  let correct = 0;
  for (const item of items) {
    const logits = lastLogits(model, item.tokens.map(encode));
    if (logits[encode(item.congruent)] > logits[encode(item.incongruent)]) {
      correct += 1;
    }
  }
  return correct / items.length;
}

/** Probe payload for cross-implementation forward-parity checks. */
export function probeLogits(
  model: LstmLm,
  vocab: string[],
  items: CorpusItem[]
): { sentences: string[][]; logits: number[][] } {
  const encode = encoder(vocab);
  const probes = items.map((item) => item.tokens);
  const logits = probes.map((sent) => Array.from(lastLogits(model, sent.map(encode))));
  return { sentences: probes, logits };
}
