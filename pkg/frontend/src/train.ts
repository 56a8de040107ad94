/**
 * Training loop: pixelwise binary cross-entropy with a positive-class
 * weight (labels are thin path tubes, so unweighted BCE collapses to
 * all-background), AdamW-style optimization (adam plus decoupled weight
 * decay on conv kernels), full-batch shuffling per epoch.
 */

import * as tf from '@tensorflow/tfjs';

import { LoadedSample } from './data.js';
import { RegionNet } from './model.js';

export interface TrainConfig {
  epochs: number;
  batchSize: number;
  learningRate: number;
  weightDecay: number;
  posWeight: number;
  seed: number;
}

export const DEFAULT_TRAIN: TrainConfig = {
  epochs: 20,
  batchSize: 8,
  learningRate: 0.001,
  weightDecay: 1e-4,
  posWeight: 8,
  seed: 1,
};

export interface TrainReport {
  epochLosses: number[];
  samples: number;
  skippedRecords: number;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function batchTensors(samples: LoadedSample[]): { x: tf.Tensor4D; y: tf.Tensor4D } {
  const { height, width } = samples[0].input;
  const hw = height * width;
  const xs = new Float32Array(samples.length * hw * 3);
  const ys = new Float32Array(samples.length * hw);
  samples.forEach((sample, b) => {
    const data = sample.input.data;
    for (let c = 0; c < 3; c++) {
      for (let i = 0; i < hw; i++) {
        xs[b * hw * 3 + i * 3 + c] = data[c * hw + i];
      }
    }
    ys.set(sample.target, b * hw);
  });
  return {
    x: tf.tensor4d(xs, [samples.length, height, width, 3]),
    y: tf.tensor4d(ys, [samples.length, height, width, 1]),
  };
}

export function weightedBceLoss(
  net: RegionNet,
  x: tf.Tensor4D,
  y: tf.Tensor4D,
  posWeight: number,
): tf.Scalar {
  const logits = net.logits(x);
  const weights = tf.add(1, tf.mul(posWeight - 1, y));
  return tf.losses.sigmoidCrossEntropy(y, logits, weights) as tf.Scalar;
}

export function trainModel(
  net: RegionNet,
  samples: LoadedSample[],
  cfg: Partial<TrainConfig> = {},
  skippedRecords = 0,
  onEpoch?: (epoch: number, loss: number) => void,
): TrainReport {
  const conf = { ...DEFAULT_TRAIN, ...cfg };
  if (samples.length === 0) throw new Error('no training samples');
  const optimizer = tf.train.adam(conf.learningRate);
  const vars = net.trainableVariables();
  const kernels = vars.filter((v) => v.name.endsWith('/kernel'));
  const rand = mulberry32(conf.seed);
  const order = samples.map((_, i) => i);
  const epochLosses: number[] = [];

  for (let epoch = 0; epoch < conf.epochs; epoch++) {
    // Fisher-Yates with the seeded generator
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(rand() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    let lossSum = 0;
    let batches = 0;
    for (let b0 = 0; b0 < order.length; b0 += conf.batchSize) {
      const batch = order.slice(b0, b0 + conf.batchSize).map((i) => samples[i]);
      const { x, y } = batchTensors(batch);
      const lossVal = optimizer.minimize(
        () => weightedBceLoss(net, x, y, conf.posWeight),
        true,
        vars,
      )!;
      lossSum += lossVal.dataSync()[0];
      batches += 1;
      lossVal.dispose();
      x.dispose();
      y.dispose();
      if (conf.weightDecay > 0) {
        tf.tidy(() => {
          const factor = 1 - conf.learningRate * conf.weightDecay;
          for (const kernel of kernels) {
            kernel.assign(tf.mul(kernel, factor));
          }
        });
      }
    }
    const meanLoss = lossSum / batches;
    epochLosses.push(meanLoss);
    onEpoch?.(epoch, meanLoss);
  }
  optimizer.dispose();
  return { epochLosses, samples: samples.length, skippedRecords };
}
