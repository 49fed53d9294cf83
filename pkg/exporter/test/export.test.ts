import { execFileSync } from 'node:child_process';
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { MockBackend } from '../src/backends.js';
import { runExport } from '../src/export.js';

const commitOne = {
  commit_id: 'c1',
  project: 'p',
  files: [{
    path: 'A.java',
    old_source: 'public class A {\n    void go() {\n        drop(1);\n        int k = 2;\n    }\n}\n',
    new_source: 'public class A {\n    void go() {\n        drop(2);\n    }\n}\n',
    deleted: [
      { line_no: 3, text: '        drop(1);', is_root_cause: true },
      { line_no: 4, text: '        int k = 2;', is_root_cause: false },
    ],
    added: [{ line_no: 3, text: '        drop(2);' }],
  }],
};

const commitTwo = {
  commit_id: 'c2',
  project: 'p',
  files: [{
    path: 'B.java',
    old_source: 'class B {\n    void f() {\n        int k = 2;\n        emit(k);\n    }\n}\n',
    new_source: 'class B {\n    void f() {\n    }\n}\n',
    deleted: [
      { line_no: 3, text: '        int k = 2;', is_root_cause: true },
      { line_no: 4, text: '        emit(k);', is_root_cause: false },
    ],
    added: [],
  }],
};

function writeDataset(dir: string): string {
  const path = join(dir, 'dataset.jsonl');
  writeFileSync(path,
    `${JSON.stringify(commitOne)}\n${JSON.stringify(commitTwo)}\n`);
  return path;
}

function pythonAvailable(): boolean {
  try {
    execFileSync('python3', ['-c', 'import rootrank'], { stdio: 'pipe' });
    return true;
  } catch {
    return false;
  }
}

describe('runExport', () => {
  it('writes one record per distinct line text with a manifest', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exporter-'));
    const dataset = writeDataset(dir);
    const out = join(dir, 'vectors.bin');
    const manifest = await runExport({ datasetPath: dataset, model: 'mock:16', outPath: out });
    // 5 changed lines, one text shared between the two commits
    expect(manifest.count).toBe(4);
    expect(manifest.dim).toBe(16);
    expect(manifest.model).toBe('mock:16:0');
    expect(manifest.pooling).toBe('mean');
    expect(manifest.commit_count).toBe(2);
    const onDisk = JSON.parse(readFileSync(`${out}.manifest.json`, 'utf8'));
    expect(onDisk).toEqual(manifest);
  });

  it('re-exporting the same inputs is bit-identical', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exporter-'));
    const dataset = writeDataset(dir);
    const a = join(dir, 'a.bin');
    const b = join(dir, 'b.bin');
    await runExport({ datasetPath: dataset, model: 'mock:12:5', outPath: a });
    await runExport({ datasetPath: dataset, model: 'mock:12:5', outPath: b });
    expect(readFileSync(a).equals(readFileSync(b))).toBe(true);
  });

  it('rejects a requested dim that the model does not produce', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exporter-'));
    const dataset = writeDataset(dir);
    await expect(runExport({
      datasetPath: dataset, model: 'mock:16', outPath: join(dir, 'x.bin'), dim: 32,
    })).rejects.toThrow(/dim/);
  });

  it('rejects an empty dataset', async () => {
    const dir = mkdtempSync(join(tmpdir(), 'exporter-'));
    const empty = join(dir, 'empty.jsonl');
    writeFileSync(empty, '');
    await expect(runExport({
      datasetPath: empty, model: 'mock:16', outPath: join(dir, 'x.bin'),
    })).rejects.toThrow(/no changed-line texts/);
  });

  it.skipIf(!pythonAvailable())(
    'round-trips through the consumer with zero unknown lookups, bit-exact',
    async () => {
      const dir = mkdtempSync(join(tmpdir(), 'exporter-'));
      const dataset = writeDataset(dir);
      const out = join(dir, 'vectors.bin');
      const backend = new MockBackend(16, 1);
      await runExport({ datasetPath: dataset, model: backend, outPath: out });

      const script = [
        'import json, sys',
        'from rootrank.dataset import load_dataset',
        'from rootrank.embedding import FileEmbedder',
        'records = load_dataset(sys.argv[1])',
        'emb = FileEmbedder(sys.argv[2])  # no fallback: unknown text raises',
        'vectors = {}',
        'for record in records:',
        '    for f in record.files:',
        '        for line in list(f.deleted) + list(f.added):',
        '            vectors[line.text] = emb.embed(line.text).tobytes().hex()',
        'print(json.dumps({"dim": emb.dim, "vectors": vectors}))',
      ].join('\n');
      const reply = JSON.parse(execFileSync(
        'python3', ['-c', script, dataset, out], { encoding: 'utf8' },
      ));
      expect(reply.dim).toBe(16);
      const texts = Object.keys(reply.vectors);
      expect(texts.length).toBe(4);
      for (const text of texts) {
        const [vector] = await backend.embed([text]);
        const hex = Buffer.from(vector.buffer, vector.byteOffset,
          vector.byteLength).toString('hex');
        expect(reply.vectors[text]).toBe(hex);
      }
    },
  );
});
