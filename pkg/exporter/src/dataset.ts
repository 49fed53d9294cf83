import { createHash } from 'node:crypto';
import { readFile } from 'node:fs/promises';

interface ChangedLine {
  line_no: number;
  text: string;
}

interface FileChange {
  path: string;
  deleted: ChangedLine[];
  added: ChangedLine[];
}

interface CommitRecord {
  commit_id: string;
  project: string;
  files: FileChange[];
}

export interface DatasetTexts {
  /** Distinct changed-line texts in first-seen order. */
  texts: string[];
  /** SHA-256 of the raw dataset bytes, recorded in the manifest. */
  contentHash: string;
  commitCount: number;
}

/**
 * Collect every distinct deleted/added line text from a JSONL dataset.
 * Only the fields the exporter needs are validated; full schema
 * validation belongs to the consumer pipeline.
 */
export async function collectDatasetTexts(path: string): Promise<DatasetTexts> {
  const raw = await readFile(path);
  const contentHash = createHash('sha256').update(raw).digest('hex');
  const seen = new Set<string>();
  const texts: string[] = [];
  let commitCount = 0;
  const lines = raw.toString('utf8').split('\n');
  for (let i = 0; i < lines.length; i += 1) {
    const line = lines[i].trim();
    if (!line) continue;
    let record: CommitRecord;
    try {
      record = JSON.parse(line) as CommitRecord;
    } catch (err) {
      throw new Error(`${path}:${i + 1}: invalid JSON: ${(err as Error).message}`);
    }
    if (!record.commit_id || !Array.isArray(record.files)) {
      throw new Error(`${path}:${i + 1}: not a commit record`);
    }
    commitCount += 1;
    for (const file of record.files) {
      for (const changed of [...(file.deleted ?? []), ...(file.added ?? [])]) {
        if (typeof changed.text !== 'string') {
          throw new Error(
            `${path}:${i + 1}: commit '${record.commit_id}' has a changed line without text`,
          );
        }
        if (!seen.has(changed.text)) {
          seen.add(changed.text);
          texts.push(changed.text);
        }
      }
    }
  }
  return { texts, contentHash, commitCount };
}
