import { textKey } from './fnv.js';

export const MAGIC = 'RCEM';
export const FORMAT_VERSION = 1;

export interface VectorRecord {
  text: string;
  vector: Float32Array;
}

/**
 * Serialize records into the binary vector file:
 *
 *   magic "RCEM" | version u32 | dim u32 | count u64   (little-endian)
 *   count records of: key u64 (FNV-1a of UTF-8 text) | dim * f32
 *
 * Keys are strictly increasing. Two distinct texts hashing to the same
 * key is a hard error: silently dropping either would corrupt lookups.
 */
export function encodeEmbeddingFile(records: VectorRecord[], dim: number): Buffer {
  const byKey = new Map<bigint, VectorRecord>();
  for (const record of records) {
    if (record.vector.length !== dim) {
      throw new Error(
        `vector for ${JSON.stringify(record.text)} has dim ${record.vector.length}, expected ${dim}`,
      );
    }
    const key = textKey(record.text);
    const prior = byKey.get(key);
    if (prior !== undefined) {
      if (prior.text !== record.text) {
        throw new Error(
          `key collision between ${JSON.stringify(prior.text)} and ${JSON.stringify(record.text)}`,
        );
      }
      continue; // identical text seen twice; keep the first record
    }
    byKey.set(key, record);
  }
  const keys = [...byKey.keys()].sort((a, b) => (a < b ? -1 : a > b ? 1 : 0));

  const headerSize = 4 + 4 + 4 + 8;
  const recordSize = 8 + 4 * dim;
  const buffer = Buffer.alloc(headerSize + recordSize * keys.length);
  buffer.write(MAGIC, 0, 'ascii');
  buffer.writeUInt32LE(FORMAT_VERSION, 4);
  buffer.writeUInt32LE(dim, 8);
  buffer.writeBigUInt64LE(BigInt(keys.length), 12);
  let offset = headerSize;
  for (const key of keys) {
    buffer.writeBigUInt64LE(key, offset);
    offset += 8;
    const { vector } = byKey.get(key)!;
    for (let i = 0; i < dim; i += 1) {
      buffer.writeFloatLE(vector[i], offset);
      offset += 4;
    }
  }
  return buffer;
}

/** Parse and validate a vector file; used for self-checks and tests. */
export function decodeEmbeddingFile(buffer: Buffer): {
  dim: number;
  entries: Map<bigint, Float32Array>;
} {
  if (buffer.length < 20 || buffer.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error('corrupt header (bad magic)');
  }
  const version = buffer.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported format version ${version}`);
  }
  const dim = buffer.readUInt32LE(8);
  const count = Number(buffer.readBigUInt64LE(12));
  const recordSize = 8 + 4 * dim;
  if (buffer.length !== 20 + recordSize * count) {
    throw new Error(`truncated file (${buffer.length} bytes)`);
  }
  const entries = new Map<bigint, Float32Array>();
  let previous = -1n;
  let offset = 20;
  for (let i = 0; i < count; i += 1) {
    const key = buffer.readBigUInt64LE(offset);
    if (key <= previous) {
      throw new Error('keys not strictly increasing');
    }
    previous = key;
    offset += 8;
    const vector = new Float32Array(dim);
    for (let j = 0; j < dim; j += 1) {
      vector[j] = buffer.readFloatLE(offset);
      offset += 4;
    }
    entries.set(key, vector);
  }
  return { dim, entries };
}
