/** Writer for the interchange checkpoint container.
 *
 * Layout: magic "CDCK", uint32 LE manifest length, JSON manifest
 * {format_version, config, vocab, tensors: {name: {offset, shape}}}, then one
 * raw little-endian float64 blob. Tensors are written in sorted name order.
 */

export const MAGIC = "CDCK";
export const FORMAT_VERSION = 1;

export interface CheckpointConfig {
  arch: "lstm" | "sha-rnn";
  num_layers: number;
  hidden_size: number;
  embed_size: number;
  vocab_size: number;
  tied_embeddings: boolean;
  attention_block_index: number;
  boom_size: number;
  layer_norm_eps: number;
}

export interface NamedTensor {
  shape: number[];
  values: Float64Array;
}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function lstmTensorNames(config: CheckpointConfig): string[] {
  const names = ["embed.W", "decoder.b"];
  for (let i = 0; i < config.num_layers; i++) {
    for (const g of ["f", "i", "g", "o"]) {
      names.push(`lstm.${i}.W_${g}`, `lstm.${i}.V_${g}`, `lstm.${i}.b_${g}`);
    }
  }
  return names.sort();
}

export function serializeCheckpoint(
  config: CheckpointConfig,
  vocab: string[],
  tensors: Map<string, NamedTensor>
): Buffer {
  if (vocab.length !== config.vocab_size) {
    throw new Error(`vocab has ${vocab.length} entries, config says ${config.vocab_size}`);
  }
  const names = [...tensors.keys()].sort();
  const index: Record<string, { offset: number; shape: number[] }> = {};
  let offset = 0;
  for (const name of names) {
    const tensor = tensors.get(name)!;
    const count = elementCount(tensor.shape);
    if (tensor.values.length !== count) {
      throw new Error(`tensor ${name}: ${tensor.values.length} values for shape [${tensor.shape}]`);
    }
    index[name] = { offset, shape: tensor.shape };
    offset += count * 8;
  }
  const manifest = {
    config,
    format_version: FORMAT_VERSION,
    tensors: index,
    vocab,
  };
  const payload = Buffer.from(JSON.stringify(manifest), "utf-8");
  const header = Buffer.alloc(8);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(payload.length, 4);
  const blob = Buffer.alloc(offset);
  for (const name of names) {
    const tensor = tensors.get(name)!;
    const view = new DataView(blob.buffer, blob.byteOffset + index[name].offset);
    for (let i = 0; i < tensor.values.length; i++) {
      view.setFloat64(i * 8, tensor.values[i], true);
    }
  }
  return Buffer.concat([header, payload, blob]);
}

/** Reader used by tests to verify round trips without the primary package. */
export function deserializeCheckpoint(buf: Buffer): {
  config: CheckpointConfig;
  vocab: string[];
  tensors: Map<string, NamedTensor>;
} {
  if (buf.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new Error("not a checkpoint file (bad magic)");
  }
  const manifestLen = buf.readUInt32LE(4);
  const manifest = JSON.parse(buf.subarray(8, 8 + manifestLen).toString("utf-8"));
  if (manifest.format_version !== FORMAT_VERSION) {
    throw new Error(`unsupported format version ${manifest.format_version}`);
  }
  const blob = buf.subarray(8 + manifestLen);
  const tensors = new Map<string, NamedTensor>();
  for (const [name, entry] of Object.entries(manifest.tensors) as [
    string,
    { offset: number; shape: number[] }
  ][]) {
    const count = elementCount(entry.shape);
    const view = new DataView(blob.buffer, blob.byteOffset + entry.offset, count * 8);
    const values = new Float64Array(count);
    for (let i = 0; i < count; i++) {
      values[i] = view.getFloat64(i * 8, true);
    }
    tensors.set(name, { shape: entry.shape, values });
  }
  return { config: manifest.config, vocab: manifest.vocab, tensors };
}
