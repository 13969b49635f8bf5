/** Reader for the nine-field tab-separated corpus line format. */

export interface CorpusItem {
  language: string;
  template: string;
  condition: string;
  targetIndex: number;
  tokens: string[]; // sentence prefix up to but excluding the target verb
  congruent: string;
  incongruent: string;
  spanStart: number;
  spanEnd: number;
}

export function parseLine(line: string): CorpusItem {
  const fields = line.replace(/\n$/, "").split("\t");
  if (fields.length !== 9) {
    throw new Error(`corpus line has ${fields.length} fields, expected 9`);
  }
  return {
    language: fields[0],
    template: fields[1],
    condition: fields[2],
    targetIndex: parseInt(fields[3], 10),
    tokens: fields[4].split(" "),
    congruent: fields[5],
    incongruent: fields[6],
    spanStart: parseInt(fields[7], 10),
    spanEnd: parseInt(fields[8], 10),
  };
}

export function parseCorpus(text: string): CorpusItem[] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map(parseLine);
}

export const UNK_TOKEN = "<unk>";

/** Vocabulary over every surface form in the corpus: <unk> first, rest sorted. */
export function buildVocab(items: CorpusItem[]): string[] {
  const forms = new Set<string>();
  for (const item of items) {
    for (const tok of item.tokens) forms.add(tok);
    forms.add(item.congruent);
    forms.add(item.incongruent);
  }
  return [UNK_TOKEN, ...[...forms].sort()];
}

export function encoder(vocab: string[]): (token: string) => number {
  const index = new Map(vocab.map((tok, i) => [tok, i]));
  const unk = index.get(UNK_TOKEN)!;
  return (token) => index.get(token) ?? unk;
}

/** Full training sequences: prefix tokens followed by the congruent verb. */
export function sentences(items: CorpusItem[]): string[][] {
  return items.map((item) => [...item.tokens, item.congruent]);
}
