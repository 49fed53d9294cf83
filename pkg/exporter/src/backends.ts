import { fnv1a64 } from './fnv.js';

export interface EmbeddingBackend {
  /** Identifier recorded in the export manifest. */
  readonly name: string;
  /** Embed a batch of line texts; one vector per input, fixed width. */
  embed(texts: string[]): Promise<Float32Array[]>;
}

/**
 * Deterministic stand-in backend for offline runs and tests. Vectors are
 * derived from per-coordinate hashes of the text, L2-normalized, so the
 * full export path (dedup, sorting, file format) is exercised without a
 * model download. The manifest clearly labels files produced this way.
 */
export class MockBackend implements EmbeddingBackend {
  readonly name: string;

  constructor(
    private readonly dim: number,
    private readonly seed = 0,
  ) {
    if (dim < 8) throw new Error(`mock backend dim ${dim} must be >= 8`);
    this.name = `mock:${dim}:${seed}`;
  }

  async embed(texts: string[]): Promise<Float32Array[]> {
    return texts.map((text) => {
      const vector = new Float32Array(this.dim);
      let norm = 0;
      for (let i = 0; i < this.dim; i += 1) {
        const h = fnv1a64(Buffer.from(`${this.seed}|${i}|${text}`, 'utf8'));
        const unit = Number(h >> 11n) / 2 ** 53; // [0, 1)
        vector[i] = Math.fround(unit * 2 - 1);
        norm += vector[i] * vector[i];
      }
      norm = Math.sqrt(norm);
      if (norm > 0) {
        for (let i = 0; i < this.dim; i += 1) {
          vector[i] = Math.fround(vector[i] / norm);
        }
      }
      return vector;
    });
  }
}

/**
 * Pretrained code-model backend over transformers.js. Token vectors from
 * the final layer are mean-pooled into one vector per line.
 */
export class PretrainedBackend implements EmbeddingBackend {
  readonly name: string;

  private extractor: ((texts: string[], options: object) => Promise<{
    dims: number[];
    data: Float32Array | number[];
  }>) | null = null;

  constructor(private readonly modelId: string) {
    this.name = `xenova:${modelId}`;
  }

  private async pipelineFor(): Promise<NonNullable<typeof this.extractor>> {
    if (this.extractor === null) {
      const { pipeline } = await import('@xenova/transformers');
      this.extractor = (await pipeline('feature-extraction', this.modelId)) as never;
    }
    return this.extractor!;
  }

  async embed(texts: string[]): Promise<Float32Array[]> {
    const extractor = await this.pipelineFor();
    const output = await extractor(texts, { pooling: 'mean', normalize: false });
    const [batch, dim] = output.dims.slice(-2);
    if (batch !== texts.length) {
      throw new Error(`model returned ${batch} vectors for ${texts.length} inputs`);
    }
    const data = output.data instanceof Float32Array
      ? output.data
      : Float32Array.from(output.data);
    const vectors: Float32Array[] = [];
    for (let i = 0; i < batch; i += 1) {
      vectors.push(data.slice(i * dim, (i + 1) * dim));
    }
    return vectors;
  }
}

/**
 * Parse a backend spec: `mock:<dim>[:<seed>]` or `xenova:<model-id>`
 * (a bare id defaults to the pretrained path).
 */
export function backendFor(spec: string): EmbeddingBackend {
  if (spec.startsWith('mock:')) {
    const [, dim, seed] = spec.split(':');
    return new MockBackend(Number(dim), seed === undefined ? 0 : Number(seed));
  }
  const modelId = spec.startsWith('xenova:') ? spec.slice('xenova:'.length) : spec;
  if (!modelId) throw new Error(`empty model id in backend spec '${spec}'`);
  return new PretrainedBackend(modelId);
}
