/** Conversion from in-framework weights to the interchange tensor set. */

import * as tf from "@tensorflow/tfjs";

import {
  CheckpointConfig,
  NamedTensor,
  lstmTensorNames,
  serializeCheckpoint,
} from "./export.js";
import { GATES, LstmLm } from "./model.js";

export function configFor(model: LstmLm): CheckpointConfig {
  return {
    arch: "lstm",
    num_layers: model.config.numLayers,
    hidden_size: model.config.hiddenSize,
    embed_size: model.config.hiddenSize,
    vocab_size: model.config.vocabSize,
    tied_embeddings: true,
    attention_block_index: 0,
    boom_size: 0,
    layer_norm_eps: 1e-5,
  };
}

function widen(t: tf.Tensor): NamedTensor {
  // float32 -> float64 widening is exact
  return { shape: t.shape.slice(), values: Float64Array.from(t.dataSync()) };
}

/** The model's weights under their canonical interchange names. */
export function collectTensors(model: LstmLm): Map<string, NamedTensor> {
  const tensors = new Map<string, NamedTensor>();
  model.layers.forEach((gates, i) => {
    for (const g of GATES) {
      tensors.set(`lstm.${i}.W_${g}`, widen(gates[g].W));
      tensors.set(`lstm.${i}.V_${g}`, widen(gates[g].V));
      tensors.set(`lstm.${i}.b_${g}`, widen(gates[g].b));
    }
  });
  tensors.set("embed.W", widen(model.embed));
  tensors.set("decoder.b", widen(model.decoderBias));
  return tensors;
}

/** Rename framework tensors to canonical names and serialize.
 *
 * ``mapping`` maps source names to interchange names; identity entries may be
 * omitted. Unmapped or missing canonical tensors abort with a message naming
 * them.
 */
export function convertCheckpoint(
  config: CheckpointConfig,
  vocab: string[],
  source: Map<string, NamedTensor>,
  mapping: Record<string, string> = {}
): Buffer {
  const renamed = new Map<string, NamedTensor>();
  for (const [name, tensor] of source) {
    renamed.set(mapping[name] ?? name, tensor);
  }
  const expected = new Set(lstmTensorNames(config));
  const missing = [...expected].filter((n) => !renamed.has(n)).sort();
  const unmapped = [...renamed.keys()].filter((n) => !expected.has(n)).sort();
  if (missing.length > 0 || unmapped.length > 0) {
    const parts: string[] = [];
    if (unmapped.length > 0) parts.push(`unmapped tensor(s): ${unmapped.join(", ")}`);
    if (missing.length > 0) parts.push(`missing tensor(s): ${missing.join(", ")}`);
    throw new Error(parts.join("; "));
  }
  return serializeCheckpoint(config, vocab, renamed);
}

export function exportModel(model: LstmLm, vocab: string[]): Buffer {
  return convertCheckpoint(configFor(model), vocab, collectTensors(model));
}
