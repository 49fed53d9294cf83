const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK_64 = 0xffffffffffffffffn;

/**
 * 64-bit FNV-1a over raw bytes. This is the key function of the vector
 * file format and must match the consumer bit for bit.
 */
export function fnv1a64(data: Buffer): bigint {
  let hash = FNV_OFFSET;
  for (const byte of data) {
    hash ^= BigInt(byte);
    hash = (hash * FNV_PRIME) & MASK_64;
  }
  return hash;
}

/** Key of a line of text: FNV-1a of its UTF-8 encoding. */
export function textKey(text: string): bigint {
  return fnv1a64(Buffer.from(text, 'utf8'));
}
