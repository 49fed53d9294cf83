#!/usr/bin/env node
import { runExport } from './export.js';

function usage(): never {
  process.stderr.write(
    'usage: embed-exporter --dataset <jsonl> --model <spec> --out <file> [--dim N]\n' +
    '  model spec: xenova:<hf-model-id> (pretrained, mean pooling)\n' +
    '              mock:<dim>[:<seed>]  (deterministic offline backend)\n',
  );
  process.exit(2);
}

function parseArgs(argv: string[]): { dataset: string; model: string; out: string; dim?: number } {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith('--') || value === undefined) usage();
    args[flag.slice(2)] = value;
  }
  const { dataset, model, out, dim } = args;
  if (!dataset || !model || !out) usage();
  for (const key of Object.keys(args)) {
    if (!['dataset', 'model', 'out', 'dim'].includes(key)) usage();
  }
  return { dataset, model, out, dim: dim === undefined ? undefined : Number(dim) };
}

async function main(): Promise<number> {
  const { dataset, model, out, dim } = parseArgs(process.argv.slice(2));
  try {
    const manifest = await runExport({ datasetPath: dataset, model, outPath: out, dim });
    process.stdout.write(
      `wrote ${manifest.count} vectors (dim ${manifest.dim}) from ${manifest.model} to ${out}\n`,
    );
    return 0;
  } catch (err) {
    process.stderr.write(`embed-exporter: error: ${(err as Error).message}\n`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
