/**
 * Region prediction network.
 *
 * Encoder of resolution-halving conv stages (taps kept at stages 3/4/5), a
 * simplified three-scale pyramid pooling block on the last stage (pooled
 * branches only, no passthrough concat), and a decoder that merges tap
 * features through sigmoid-gated channel-attention fusion. A single-channel
 * classifier produces logits at 1/8 resolution which are bilinearly
 * upsampled to the input size; outputs are sigmoid probabilities in [0, 1].
 *
 * Weights are explicit tf.Variables (seeded Glorot-uniform), so checkpoints
 * are a plain config JSON plus one flat Float32 blob.
 */

import * as tf from '@tensorflow/tfjs';
import { readFileSync, writeFileSync } from 'node:fs';

export interface ModelConfig {
  inputChannels: number;
  stageWidths: number[];
  /** per-stage downsampling; the last stage keeps resolution so the
   *  three-scale pyramid fits desk-scale inputs */
  stageStrides: number[];
  ppmBins: number[];
  decoderWidth: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  inputChannels: 3,
  stageWidths: [8, 16, 32, 48, 64],
  stageStrides: [2, 2, 2, 2, 1],
  ppmBins: [1, 2, 4],
  decoderWidth: 32,
  seed: 7,
};

interface ConvSpec {
  name: string;
  kh: number;
  kw: number;
  inCh: number;
  outCh: number;
}

/**
 * conv2d with a hand-rolled filter gradient.
 *
 * tfjs-cpu's Conv2DBackpropFilter kernel is a naive scalar loop that
 * dominates training time by two orders of magnitude. The filter gradient
 * is itself a convolution (correlate the padded input with the output
 * gradient, batch and channel axes swapped, output-grad taps dilated by the
 * stride), which routes through the fast Conv2D forward kernel instead. The
 * input gradient keeps tfjs's conv2dTranspose path, which is already fast.
 */
export function convFastGrad(x: tf.Tensor4D, kernel: tf.Tensor4D, stride: number): tf.Tensor4D {
  const convOp = tf.customGrad((xi, ki, save) => {
    const xT = xi as tf.Tensor4D;
    const kT = ki as tf.Tensor4D;
    (save as tf.GradSaveFunc)([xT, kT]);
    const value = tf.conv2d(xT, kT, stride, 'same');
    const gradFunc = (dy: tf.Tensor4D, saved: tf.Tensor[]) => {
      const [xs, ks] = saved as [tf.Tensor4D, tf.Tensor4D];
      const [kh, kw] = ks.shape;
      const [b, h, w, inCh] = xs.shape;
      const dx = tf.conv2dTranspose(dy, ks, [b, h, w, inCh], stride, 'same');
      // TF 'same' padding split (extra pad goes bottom/right)
      const outH = Math.ceil(h / stride);
      const outW = Math.ceil(w / stride);
      const padH = Math.max((outH - 1) * stride + kh - h, 0);
      const padW = Math.max((outW - 1) * stride + kw - w, 0);
      const top = Math.floor(padH / 2);
      const left = Math.floor(padW / 2);
      const xp = tf.pad(xs, [[0, 0], [top, padH - top], [left, padW - left], [0, 0]]);
      const xAsBatch = tf.transpose(xp, [3, 1, 2, 0]); // [Cin, Hp, Wp, B]
      const dyAsKernel = tf.transpose(dy, [1, 2, 0, 3]); // [outH, outW, B, Cout]
      const dkRaw = tf.conv2d(
        xAsBatch as tf.Tensor4D, dyAsKernel as tf.Tensor4D, 1, 'valid', 'NHWC', stride,
      ); // [Cin, kh, kw, Cout]
      const dk = tf.transpose(dkRaw, [1, 2, 0, 3]);
      return [dx, dk];
    };
    return { value, gradFunc } as unknown as {
      value: tf.Tensor;
      gradFunc: (dy: tf.Tensor, saved: tf.Tensor[]) => tf.Tensor[];
    };
  });
  return convOp(x, kernel) as tf.Tensor4D;
}

let instanceCounter = 0;

export class RegionNet {
  readonly config: ModelConfig;
  readonly variables = new Map<string, tf.Variable>();
  private seedCounter: number;
  private readonly scope: string;

  constructor(config: Partial<ModelConfig> = {}) {
    this.scope = `regionnet${instanceCounter++}`;
    this.config = { ...DEFAULT_CONFIG, ...config };
    const c = this.config;
    if (c.stageWidths.length !== c.stageStrides.length) {
      throw new Error('stageWidths and stageStrides must have equal length');
    }
    if (c.stageWidths.length < 3) {
      throw new Error('need at least 3 encoder stages for the decoder taps');
    }
    this.seedCounter = c.seed * 1000 + 1;

    let inCh = c.inputChannels;
    c.stageWidths.forEach((outCh, i) => {
      this.addConv({ name: `stage${i + 1}`, kh: 3, kw: 3, inCh, outCh });
      inCh = outCh;
    });
    const c5 = c.stageWidths[c.stageWidths.length - 1];
    c.ppmBins.forEach((_, i) => {
      this.addConv({ name: `ppm${i}`, kh: 1, kw: 1, inCh: c5, outCh: c5 });
    });
    this.addConv({ name: 'ppm_merge', kh: 1, kw: 1, inCh: c5 * c.ppmBins.length, outCh: c5 });
    const d = c.decoderWidth;
    const c4 = c.stageWidths[c.stageWidths.length - 2];
    const c3 = c.stageWidths[c.stageWidths.length - 3];
    this.addConv({ name: 'fuse4_high', kh: 1, kw: 1, inCh: c5, outCh: d });
    this.addConv({ name: 'fuse4_low', kh: 1, kw: 1, inCh: c4, outCh: d });
    this.addConv({ name: 'fuse4_gate', kh: 1, kw: 1, inCh: 2 * d, outCh: d });
    this.addConv({ name: 'fuse4_conv', kh: 3, kw: 3, inCh: d, outCh: d });
    this.addConv({ name: 'fuse3_high', kh: 1, kw: 1, inCh: d, outCh: d });
    this.addConv({ name: 'fuse3_low', kh: 1, kw: 1, inCh: c3, outCh: d });
    this.addConv({ name: 'fuse3_gate', kh: 1, kw: 1, inCh: 2 * d, outCh: d });
    this.addConv({ name: 'fuse3_conv', kh: 3, kw: 3, inCh: d, outCh: d });
    this.addConv({ name: 'classifier', kh: 1, kw: 1, inCh: d, outCh: 1 });
  }

  private addConv(spec: ConvSpec): void {
    const { name, kh, kw, inCh, outCh } = spec;
    const fanIn = kh * kw * inCh;
    const fanOut = kh * kw * outCh;
    const limit = Math.sqrt(6 / (fanIn + fanOut));
    const kernel = tf.variable(
      tf.randomUniform([kh, kw, inCh, outCh], -limit, limit, 'float32', this.seedCounter++),
      true,
      `${this.scope}/${name}/kernel`,
    );
    const bias = tf.variable(tf.zeros([outCh]), true, `${this.scope}/${name}/bias`);
    this.variables.set(`${name}/kernel`, kernel);
    this.variables.set(`${name}/bias`, bias);
  }

  private conv(x: tf.Tensor4D, name: string, stride: number, relu = true): tf.Tensor4D {
    const kernel = this.variables.get(`${name}/kernel`)! as unknown as tf.Tensor4D;
    const bias = this.variables.get(`${name}/bias`)!;
    let out = tf.add(convFastGrad(x, kernel, stride), bias) as tf.Tensor4D;
    if (relu) out = tf.relu(out);
    return out;
  }

  get totalStride(): number {
    return this.config.stageStrides.reduce((a, b) => a * b, 1);
  }

  /** Stride from the input down to the stage-3 tap (classifier resolution). */
  get tap3Stride(): number {
    const upto = this.config.stageStrides.slice(0, this.config.stageWidths.length - 2);
    return upto.reduce((a, b) => a * b, 1);
  }

  validateInputSize(height: number, width: number): void {
    const s = this.totalStride;
    if (height % s !== 0 || width % s !== 0) {
      throw new Error(`input ${height}x${width} not divisible by the total stride ${s}`);
    }
    const fh = height / s;
    const fw = width / s;
    for (const bin of this.config.ppmBins) {
      if (fh < bin || fw < bin || fh % bin !== 0 || fw % bin !== 0) {
        throw new Error(
          `bottleneck ${fh}x${fw} incompatible with pyramid bin ${bin}; ` +
          `use a larger input or smaller ppmBins`,
        );
      }
    }
  }

  /** Full-resolution logits, shape [batch, h, w, 1]. */
  logits(x: tf.Tensor4D): tf.Tensor4D {
    const [, height, width] = x.shape;
    this.validateInputSize(height, width);
    const c = this.config;
    const taps: tf.Tensor4D[] = [];
    let cur = x;
    c.stageWidths.forEach((_, i) => {
      cur = this.conv(cur, `stage${i + 1}`, c.stageStrides[i]);
      taps.push(cur);
    });
    const n = taps.length;
    const tap3 = taps[n - 3];
    const tap4 = taps[n - 2];
    const tap5 = taps[n - 1];

    // simplified pyramid pooling: pooled branches only, summed via concat+1x1
    const [, fh, fw] = tap5.shape;
    const branches = c.ppmBins.map((bin, i) => {
      const pooled = tf.avgPool(tap5, [fh / bin, fw / bin], [fh / bin, fw / bin], 'valid');
      const mixed = this.conv(pooled as tf.Tensor4D, `ppm${i}`, 1);
      return tf.image.resizeBilinear(mixed, [fh, fw]) as tf.Tensor4D;
    });
    const context = this.conv(tf.concat(branches, 3) as tf.Tensor4D, 'ppm_merge', 1);

    const d4 = this.fuse(context, tap4, 'fuse4');
    const d4up = tf.image.resizeBilinear(d4, [tap3.shape[1], tap3.shape[2]]) as tf.Tensor4D;
    const d3 = this.fuse(d4up, tap3, 'fuse3');
    const logitsLow = this.conv(d3, 'classifier', 1, false);
    return tf.image.resizeBilinear(logitsLow, [height, width]) as tf.Tensor4D;
  }

  /** Sigmoid-gated channel attention between a high-level feature map and a
   *  same-resolution low-level tap. */
  private fuse(high: tf.Tensor4D, low: tf.Tensor4D, name: string): tf.Tensor4D {
    let h = this.conv(high, `${name}_high`, 1);
    if (h.shape[1] !== low.shape[1] || h.shape[2] !== low.shape[2]) {
      h = tf.image.resizeBilinear(h, [low.shape[1], low.shape[2]]) as tf.Tensor4D;
    }
    const l = this.conv(low, `${name}_low`, 1);
    const pooled = tf.mean(tf.concat([h, l], 3), [1, 2], true) as tf.Tensor4D;
    const gate = tf.sigmoid(this.conv(pooled, `${name}_gate`, 1, false));
    const mixed = tf.add(tf.mul(h, gate), tf.mul(l, tf.sub(1, gate))) as tf.Tensor4D;
    return this.conv(mixed, `${name}_conv`, 1);
  }

  /** Probabilities in [0, 1], shape [batch, h, w, 1]. */
  predict(x: tf.Tensor4D): tf.Tensor4D {
    return tf.tidy(() => tf.sigmoid(this.logits(x)));
  }

  trainableVariables(): tf.Variable[] {
    return [...this.variables.values()];
  }

  dispose(): void {
    for (const v of this.variables.values()) v.dispose();
    this.variables.clear();
  }

  save(path: string): void {
    const names = [...this.variables.keys()];
    const arrays = names.map((n) => this.variables.get(n)!.dataSync() as Float32Array);
    const total = arrays.reduce((a, arr) => a + arr.length, 0);
    const blob = new Float32Array(total);
    let off = 0;
    for (const arr of arrays) {
      blob.set(arr, off);
      off += arr.length;
    }
    const meta = {
      config: this.config,
      names,
      shapes: names.map((n) => this.variables.get(n)!.shape),
    };
    writeFileSync(path, JSON.stringify(meta));
    writeFileSync(`${path}.weights`, Buffer.from(blob.buffer));
  }

  static load(path: string): RegionNet {
    const meta = JSON.parse(readFileSync(path, 'utf-8')) as {
      config: ModelConfig;
      names: string[];
      shapes: number[][];
    };
    const raw = readFileSync(`${path}.weights`);
    const blob = new Float32Array(
      raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength),
    );
    const net = new RegionNet(meta.config);
    let off = 0;
    meta.names.forEach((name, i) => {
      const variable = net.variables.get(name);
      if (!variable) throw new Error(`checkpoint names unknown variable ${name}`);
      const count = meta.shapes[i].reduce((a, b) => a * b, 1);
      variable.assign(tf.tensor(blob.subarray(off, off + count), meta.shapes[i]));
      off += count;
    });
    if (off !== blob.length) {
      throw new Error(`checkpoint weight blob has ${blob.length} values, used ${off}`);
    }
    return net;
  }
}

/** Convert one channel-major NNPR sample (3,h,w) to an NHWC input tensor. */
export function sampleToTensor(data: Float32Array, height: number, width: number): tf.Tensor4D {
  const hw = height * width;
  const nhwc = new Float32Array(hw * 3);
  for (let c = 0; c < 3; c++) {
    for (let i = 0; i < hw; i++) {
      nhwc[i * 3 + c] = data[c * hw + i];
    }
  }
  return tf.tensor4d(nhwc, [1, height, width, 3]);
}
