import { rename, writeFile } from 'node:fs/promises';

import { backendFor, EmbeddingBackend } from './backends.js';
import { collectDatasetTexts } from './dataset.js';
import { encodeEmbeddingFile, VectorRecord } from './embeddingFile.js';

const BATCH_SIZE = 16;

export interface ExportOptions {
  datasetPath: string;
  model: string | EmbeddingBackend;
  outPath: string;
  /** Expected vector width; mismatch with the model output is an error. */
  dim?: number;
}

export interface ExportManifest {
  model: string;
  pooling: 'mean';
  dim: number;
  count: number;
  dataset_sha256: string;
  commit_count: number;
}

/**
 * Run a model over every distinct changed-line text of a dataset and
 * write the binary vector file plus a JSON manifest next to it. Output
 * is written atomically and is bit-identical across reruns of the same
 * inputs (no timestamps, deterministic ordering).
 */
export async function runExport(options: ExportOptions): Promise<ExportManifest> {
  const backend = typeof options.model === 'string'
    ? backendFor(options.model)
    : options.model;
  const { texts, contentHash, commitCount } = await collectDatasetTexts(options.datasetPath);
  if (texts.length === 0) {
    throw new Error(`${options.datasetPath}: no changed-line texts to embed`);
  }

  const records: VectorRecord[] = [];
  let dim: number | undefined;
  for (let start = 0; start < texts.length; start += BATCH_SIZE) {
    const batch = texts.slice(start, start + BATCH_SIZE);
    const vectors = await backend.embed(batch);
    for (let i = 0; i < batch.length; i += 1) {
      const vector = vectors[i];
      if (dim === undefined) {
        dim = vector.length;
        if (options.dim !== undefined && options.dim !== dim) {
          throw new Error(
            `model produces dim ${dim}, but dim ${options.dim} was requested`,
          );
        }
      } else if (vector.length !== dim) {
        throw new Error(
          `inconsistent vector widths from model: ${vector.length} vs ${dim}`,
        );
      }
      for (const value of vector) {
        if (!Number.isFinite(value)) {
          throw new Error(`non-finite embedding for ${JSON.stringify(batch[i])}`);
        }
      }
      records.push({ text: batch[i], vector });
    }
  }

  const buffer = encodeEmbeddingFile(records, dim!);
  const manifest: ExportManifest = {
    model: backend.name,
    pooling: 'mean',
    dim: dim!,
    count: records.length,
    dataset_sha256: contentHash,
    commit_count: commitCount,
  };
  const tmp = `${options.outPath}.tmp`;
  await writeFile(tmp, buffer);
  await rename(tmp, options.outPath);
  await writeFile(`${options.outPath}.manifest.json`,
    JSON.stringify(manifest, Object.keys(manifest).sort(), 2) + '\n');
  return manifest;
}
