/**
 * Dataset access: JSONL manifests with one record per sample, 3-channel
 * NNPR inputs (cost map, start encoding, goal encoding) and label paths as
 * `x y` text files. Training targets rasterize the label path and dilate it
 * by one cell, since single-pixel targets are too sparse at desk scale.
 */

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';

import { readNnpr, Raster } from './nnpr.js';

export interface ManifestRecord {
  sample_path: string;
  label_path: string;
  start: [number, number];
  goal: [number, number];
  omega: number;
  seed: number;
  index: number;
}

export interface LoadedSample {
  record: ManifestRecord;
  input: Raster; // 3 channels
  labelCells: Array<[number, number]>;
  /** row-major 0/1 training target (dilated label raster) */
  target: Float32Array;
}

export function loadManifest(manifestPath: string): ManifestRecord[] {
  const base = dirname(manifestPath);
  const records: ManifestRecord[] = [];
  for (const line of readFileSync(manifestPath, 'utf-8').split('\n')) {
    const text = line.trim();
    if (!text) continue;
    const rec = JSON.parse(text) as ManifestRecord;
    rec.sample_path = join(base, rec.sample_path);
    rec.label_path = join(base, rec.label_path);
    records.push(rec);
  }
  return records;
}

export function readLabelPath(path: string): Array<[number, number]> {
  const cells: Array<[number, number]> = [];
  for (const line of readFileSync(path, 'utf-8').split('\n')) {
    const text = line.trim();
    if (!text) continue;
    const parts = text.split(/\s+/);
    if (parts.length !== 2) throw new Error(`${path}: expected 'x y', got '${text}'`);
    cells.push([parseInt(parts[0], 10), parseInt(parts[1], 10)]);
  }
  if (cells.length === 0) throw new Error(`${path}: empty path file`);
  return cells;
}

export function rasterizeLabel(
  cells: Array<[number, number]>,
  width: number,
  height: number,
  dilate = 1,
): Float32Array {
  const target = new Float32Array(width * height);
  for (const [x, y] of cells) {
    for (let dy = -dilate; dy <= dilate; dy++) {
      for (let dx = -dilate; dx <= dilate; dx++) {
        const vx = x + dx;
        const vy = y + dy;
        if (vx >= 0 && vx < width && vy >= 0 && vy < height) {
          target[vy * width + vx] = 1;
        }
      }
    }
  }
  return target;
}

export interface LoadResult {
  samples: LoadedSample[];
  skipped: number;
}

/** Load manifest records, skipping (and counting) corrupt ones. */
export function loadSamples(records: ManifestRecord[], dilate = 1): LoadResult {
  const samples: LoadedSample[] = [];
  let skipped = 0;
  for (const record of records) {
    try {
      const input = readNnpr(record.sample_path);
      if (input.channels !== 3) {
        throw new Error(`expected 3 channels, got ${input.channels}`);
      }
      const labelCells = readLabelPath(record.label_path);
      const target = rasterizeLabel(labelCells, input.width, input.height, dilate);
      samples.push({ record, input, labelCells, target });
    } catch {
      skipped += 1;
    }
  }
  return { samples, skipped };
}
