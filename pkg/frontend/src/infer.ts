/**
 * Inference: one NNPR sample in, one single-channel NNPR probability map
 * out, plus wall-clock latency per frame.
 */

import * as tf from '@tensorflow/tfjs';

import { Raster, writeNnpr } from './nnpr.js';
import { RegionNet, sampleToTensor } from './model.js';

export interface InferenceResult {
  probs: Float32Array;
  height: number;
  width: number;
  seconds: number;
}

export function inferProbabilities(net: RegionNet, input: Raster): InferenceResult {
  if (input.channels !== 3) {
    throw new Error(`expected a 3-channel sample, got ${input.channels} channels`);
  }
  net.validateInputSize(input.height, input.width);
  const t0 = performance.now();
  const x = sampleToTensor(input.data, input.height, input.width);
  const out = net.predict(x);
  const probs = out.dataSync() as Float32Array;
  x.dispose();
  out.dispose();
  const seconds = (performance.now() - t0) / 1000;
  return { probs: Float32Array.from(probs), height: input.height, width: input.width, seconds };
}

export function writeProbabilityMap(path: string, result: InferenceResult): void {
  writeNnpr(path, {
    channels: 1,
    height: result.height,
    width: result.width,
    data: result.probs,
  });
}
