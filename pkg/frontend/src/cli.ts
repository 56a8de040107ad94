/**
 * CLI: train, infer, eval-mm.
 *
 *   node dist/cli.js train  --dataset DIR/manifest.jsonl --out model.json
 *                           [--epochs N] [--seed N] [--limit N] [--log file]
 *   node dist/cli.js infer  --dataset DIR/manifest.jsonl --checkpoint model.json
 *                           --out DIR [--limit N]
 *   node dist/cli.js eval-mm --dataset DIR/manifest.jsonl --checkpoint model.json
 *                           [--limit N]
 *
 * infer writes one `{sample_stem}.prob.nnpr` per sample (the layout the
 * planner toolkit's masked benchmark consumes) and a line-delimited log of
 * per-frame latencies.
 */

import { appendFileSync, mkdirSync, writeFileSync } from 'node:fs';
import { basename, join } from 'node:path';

import { loadManifest, loadSamples } from './data.js';
import { inferProbabilities, writeProbabilityMap } from './infer.js';
import { RegionNet } from './model.js';
import { adaptiveThreshold, modelMetric } from './regions.js';
import { trainModel } from './train.js';

interface Args {
  command: string;
  options: Map<string, string>;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new Error('usage: cli.ts <train|infer|eval-mm> --dataset ... [options]');
  }
  const [command, ...rest] = argv;
  const options = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith('--') || i + 1 >= rest.length) {
      throw new Error(`bad option ${key}`);
    }
    options.set(key.slice(2), rest[i + 1]);
  }
  return { command, options };
}

function requireOpt(args: Args, name: string): string {
  const value = args.options.get(name);
  if (!value) throw new Error(`--${name} is required`);
  return value;
}

function cmdTrain(args: Args): void {
  const manifest = requireOpt(args, 'dataset');
  const out = requireOpt(args, 'out');
  const epochs = parseInt(args.options.get('epochs') ?? '20', 10);
  const seed = parseInt(args.options.get('seed') ?? '7', 10);
  const limit = parseInt(args.options.get('limit') ?? '0', 10);
  const logPath = args.options.get('log');

  let records = loadManifest(manifest);
  if (limit > 0) records = records.slice(0, limit);
  const { samples, skipped } = loadSamples(records);
  if (skipped > 0) console.error(`skipped ${skipped} corrupt records`);
  const net = new RegionNet({ seed });
  const report = trainModel(net, samples, { epochs, seed }, skipped, (epoch, loss) => {
    const line = JSON.stringify({ epoch, loss });
    console.log(line);
    if (logPath) appendFileSync(logPath, line + '\n');
  });
  net.save(out);
  console.log(
    JSON.stringify({
      saved: out,
      samples: report.samples,
      skipped: report.skippedRecords,
      finalLoss: report.epochLosses[report.epochLosses.length - 1],
    }),
  );
}

function cmdInfer(args: Args): void {
  const manifest = requireOpt(args, 'dataset');
  const checkpoint = requireOpt(args, 'checkpoint');
  const outDir = requireOpt(args, 'out');
  const limit = parseInt(args.options.get('limit') ?? '0', 10);

  mkdirSync(outDir, { recursive: true });
  let records = loadManifest(manifest);
  if (limit > 0) records = records.slice(0, limit);
  const { samples, skipped } = loadSamples(records);
  if (skipped > 0) console.error(`skipped ${skipped} corrupt records`);
  const net = RegionNet.load(checkpoint);
  const latencies: number[] = [];
  const logLines: string[] = [];
  for (const sample of samples) {
    const result = inferProbabilities(net, sample.input);
    const stem = basename(sample.record.sample_path).replace(/\.nnpr$/, '');
    const outPath = join(outDir, `${stem}.prob.nnpr`);
    writeProbabilityMap(outPath, result);
    latencies.push(result.seconds);
    logLines.push(JSON.stringify({ sample: stem, seconds: result.seconds }));
  }
  writeFileSync(join(outDir, 'inference_log.jsonl'), logLines.join('\n') + '\n');
  const mean = latencies.reduce((a, b) => a + b, 0) / Math.max(1, latencies.length);
  console.log(
    JSON.stringify({ frames: latencies.length, meanSeconds: mean, fps: 1 / mean, outDir }),
  );
}

function cmdEvalMm(args: Args): void {
  const manifest = requireOpt(args, 'dataset');
  const checkpoint = requireOpt(args, 'checkpoint');
  const limit = parseInt(args.options.get('limit') ?? '0', 10);

  let records = loadManifest(manifest);
  if (limit > 0) records = records.slice(0, limit);
  const { samples, skipped } = loadSamples(records);
  if (skipped > 0) console.error(`skipped ${skipped} corrupt records`);
  const net = RegionNet.load(checkpoint);
  const mms: number[] = [];
  let fallbacks = 0;
  for (const sample of samples) {
    const result = inferProbabilities(net, sample.input);
    const outcome = adaptiveThreshold(
      result.probs, result.width, result.height,
      sample.record.start, sample.record.goal,
    );
    if (outcome.fallback) fallbacks += 1;
    mms.push(modelMetric(sample.labelCells.length, outcome.mask));
  }
  mms.sort((a, b) => a - b);
  const median = mms.length ? mms[Math.floor(mms.length / 2)] : NaN;
  const mean = mms.reduce((a, b) => a + b, 0) / Math.max(1, mms.length);
  console.log(
    JSON.stringify({ samples: mms.length, medianMm: median, meanMm: mean, fallbacks }),
  );
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    switch (args.command) {
      case 'train':
        cmdTrain(args);
        return 0;
      case 'infer':
        cmdInfer(args);
        return 0;
      case 'eval-mm':
        cmdEvalMm(args);
        return 0;
      default:
        throw new Error(`unknown command ${args.command}`);
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

const isMain = process.argv[1] && import.meta.url.endsWith(basename(process.argv[1]));
if (isMain) {
  process.exit(main(process.argv.slice(2)));
}
