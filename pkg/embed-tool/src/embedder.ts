/**
 * Embedding backends.
 *
 * Model names are passed through to transformers.js (feature extraction
 * with mean pooling), except for the built-in offline backend
 * `hash:<dim>`: deterministic feature hashing of words and character
 * trigrams, L2-normalized. The hash backend exists for tests and for
 * air-gapped environments; it is not a substitute for a real sentence
 * encoder.
 */

export interface Embedder {
  readonly dim: number;
  embed(texts: string[]): Promise<number[][]>;
}

export class ModelLoadError extends Error {}

/** FNV-1a 32-bit hash. */
function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function tokens(text: string): string[] {
  const words = text.toLowerCase().split(/\s+/).filter((w) => w.length > 0);
  const out: string[] = [];
  for (const w of words) {
    out.push(`w:${w}`);
    const padded = `^${w}$`;
    for (let i = 0; i + 3 <= padded.length; i++) {
      out.push(`g:${padded.slice(i, i + 3)}`);
    }
  }
  return out;
}

export class HashEmbedder implements Embedder {
  constructor(readonly dim: number) {
    if (!Number.isInteger(dim) || dim < 2) {
      throw new ModelLoadError(`hash backend needs an integer dim >= 2, got ${dim}`);
    }
  }

  async embed(texts: string[]): Promise<number[][]> {
    return texts.map((t) => this.embedOne(t));
  }

  private embedOne(text: string): number[] {
    const v = new Array<number>(this.dim).fill(0);
    for (const tok of tokens(text)) {
      const h = fnv1a(tok);
      const bucket = h % this.dim;
      const sign = fnv1a(`s:${tok}`) & 1 ? 1 : -1;
      v[bucket] += sign;
    }
    const norm = Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
    return norm > 0 ? v.map((x) => x / norm) : v;
  }
}

class TransformersEmbedder implements Embedder {
  dim = 0;

  private constructor(private extractor: (texts: string[], opts: object) => Promise<{ data: Float32Array; dims: number[] }>) {}

  static async load(model: string): Promise<TransformersEmbedder> {
    let pipeline;
    try {
      ({ pipeline } = await import("@xenova/transformers"));
    } catch (err) {
      throw new ModelLoadError(
        "the @xenova/transformers package is not installed; " +
          "install it to use pretrained models, or use the hash:<dim> backend",
      );
    }
    let extractor;
    try {
      extractor = await pipeline("feature-extraction", model);
    } catch (err) {
      throw new ModelLoadError(`failed to load model ${JSON.stringify(model)}: ${err}`);
    }
    return new TransformersEmbedder(extractor as never);
  }

  async embed(texts: string[]): Promise<number[][]> {
    const output = await this.extractor(texts, { pooling: "mean", normalize: true });
    const [n, dim] = output.dims;
    this.dim = dim;
    const rows: number[][] = [];
    for (let i = 0; i < n; i++) {
      rows.push(Array.from(output.data.slice(i * dim, (i + 1) * dim)));
    }
    return rows;
  }
}

/** Resolve a model name to a backend; throws ModelLoadError on failure. */
export async function loadEmbedder(model: string): Promise<Embedder> {
  const hashMatch = /^hash:(\d+)$/.exec(model);
  if (hashMatch) {
    return new HashEmbedder(Number(hashMatch[1]));
  }
  return TransformersEmbedder.load(model);
}
