/** Stacked-LSTM language model with per-gate variables, trained with tfjs.
 *
 * The parameterization mirrors the interchange checkpoint exactly: per layer
 * and gate g in {f,i,g,o} a W_g (d_h x d_in), V_g (d_h x d_h) and b_g (d_h),
 * plus a tied embedding/decoder matrix embed.W (V x d) and decoder bias.
 */

import * as tf from "@tensorflow/tfjs";

export const GATES = ["f", "i", "g", "o"] as const;
export type Gate = (typeof GATES)[number];

export interface ModelConfig {
  numLayers: number;
  hiddenSize: number;
  vocabSize: number;
}

export interface GateVars {
  W: tf.Variable<tf.Rank.R2>;
  V: tf.Variable<tf.Rank.R2>;
  b: tf.Variable<tf.Rank.R1>;
}

export interface LstmLm {
  config: ModelConfig;
  layers: Record<Gate, GateVars>[];
  embed: tf.Variable<tf.Rank.R2>; // (V, d), also the decoder weight
  decoderBias: tf.Variable<tf.Rank.R1>; // (V,)
}

export function createModel(config: ModelConfig, seed = 0): LstmLm {
  const { numLayers, hiddenSize: d, vocabSize } = config;
  let counter = seed;
  const init = (shape: number[], scale: number) =>
    tf.randomNormal(shape, 0, scale, "float32", counter++);
  const layers: Record<Gate, GateVars>[] = [];
  for (let i = 0; i < numLayers; i++) {
    const gates = {} as Record<Gate, GateVars>;
    for (const g of GATES) {
      // no explicit variable names: tfjs registers them globally and a second
      // model instance would collide; canonical names are attached at export
      gates[g] = {
        W: tf.variable(init([d, d], 0.25)) as tf.Variable<tf.Rank.R2>,
        V: tf.variable(init([d, d], 0.25)) as tf.Variable<tf.Rank.R2>,
        b: tf.variable(tf.zeros([d])) as tf.Variable<tf.Rank.R1>,
      };
    }
    layers.push(gates);
  }
  const embed = tf.variable(init([vocabSize, d], 0.25)) as tf.Variable<tf.Rank.R2>;
  const decoderBias = tf.variable(tf.zeros([vocabSize])) as tf.Variable<tf.Rank.R1>;
  return { config, layers, embed, decoderBias };
}

export function trainableVariables(model: LstmLm): tf.Variable[] {
  const vars: tf.Variable[] = [];
  for (const gates of model.layers) {
    for (const g of GATES) {
      vars.push(gates[g].W, gates[g].V, gates[g].b);
    }
  }
  vars.push(model.embed, model.decoderBias);
  return vars;
}

function cellStep(
  gates: Record<Gate, GateVars>,
  x: tf.Tensor2D, // (B, d_in)
  h: tf.Tensor2D,
  c: tf.Tensor2D
): [tf.Tensor2D, tf.Tensor2D] {
  const pre = (g: Gate) =>
    tf.add(
      tf.add(tf.matMul(x, gates[g].W, false, true), tf.matMul(h, gates[g].V, false, true)),
      gates[g].b
    ) as tf.Tensor2D;
  const f = tf.sigmoid(pre("f"));
  const i = tf.sigmoid(pre("i"));
  const gg = tf.tanh(pre("g"));
  const o = tf.sigmoid(pre("o"));
  const cNext = tf.add(tf.mul(f, c), tf.mul(i, gg)) as tf.Tensor2D;
  const hNext = tf.mul(o, tf.tanh(cNext)) as tf.Tensor2D;
  return [hNext, cNext];
}

/** Logits for every position of a (B, T) batch of token ids: (B, T, V). */
export function forward(model: LstmLm, tokens: tf.Tensor2D): tf.Tensor3D {
  return tf.tidy(() => {
    const [batch, time] = tokens.shape;
    const d = model.config.hiddenSize;
    let hs = model.layers.map(() => tf.zeros([batch, d]) as tf.Tensor2D);
    let cs = model.layers.map(() => tf.zeros([batch, d]) as tf.Tensor2D);
    const outputs: tf.Tensor2D[] = [];
    const embedded = tf.gather(model.embed as tf.Tensor, tokens) as tf.Tensor3D; // (B, T, d)
    for (let t = 0; t < time; t++) {
      let x = embedded.slice([0, t, 0], [batch, 1, d]).reshape([batch, d]) as tf.Tensor2D;
      for (let l = 0; l < model.layers.length; l++) {
        [hs[l], cs[l]] = cellStep(model.layers[l], x, hs[l], cs[l]);
        x = hs[l];
      }
      outputs.push(x);
    }
    const stacked = tf.stack(outputs, 1) as tf.Tensor3D; // (B, T, d)
    const logits = tf.add(
      tf.matMul(stacked.reshape([batch * time, d]), model.embed, false, true),
      model.decoderBias
    );
    return logits.reshape([batch, time, model.config.vocabSize]) as tf.Tensor3D;
  });
}

/** Mean next-token cross entropy over all positions of a (B, T) batch. */
export function loss(model: LstmLm, tokens: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => {
    const [batch, time] = tokens.shape;
    const logits = forward(model, tokens);
    const inputsLogits = logits.slice([0, 0, 0], [batch, time - 1, model.config.vocabSize]);
    const targets = tokens.slice([0, 1], [batch, time - 1]);
    const oneHot = tf.oneHot(targets.flatten().toInt(), model.config.vocabSize);
    return tf.losses.softmaxCrossEntropy(
      oneHot,
      inputsLogits.reshape([batch * (time - 1), model.config.vocabSize])
    ) as tf.Scalar;
  });
}

/** Logit vector at the last position of one token-id sequence. */
export function lastLogits(model: LstmLm, ids: number[]): Float32Array {
  return tf.tidy(() => {
    const logits = forward(model, tf.tensor2d([ids], [1, ids.length], "int32"));
    const last = logits.slice([0, ids.length - 1, 0], [1, 1, model.config.vocabSize]);
    return last.dataSync() as Float32Array;
  });
}
