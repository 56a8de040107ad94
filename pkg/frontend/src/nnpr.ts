/**
 * NNPR raster container v1 (shared wire format with the planner toolkit).
 *
 * Little-endian header: magic "NNPR" | version u8=1 | dtype u8=0 (float32) |
 * channels u16 | height u32 | width u32, followed by channels*height*width
 * float32 values, channel-major, row-major within a channel.
 */

import { readFileSync, writeFileSync } from 'node:fs';

const MAGIC = 0x4e4e5052; // "NNPR" big-endian read of the 4 bytes
const HEADER_BYTES = 16;

export interface Raster {
  channels: number;
  height: number;
  width: number;
  /** channel-major, row-major float32 values */
  data: Float32Array;
}

export class NnprFormatError extends Error {}

export function writeNnpr(path: string, raster: Raster): void {
  const { channels, height, width, data } = raster;
  if (data.length !== channels * height * width) {
    throw new NnprFormatError(
      `data length ${data.length} does not match ${channels}x${height}x${width}`,
    );
  }
  if (channels > 0xffff) {
    throw new NnprFormatError(`channel count ${channels} overflows the header field`);
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * data.length);
  buf.write('NNPR', 0, 'ascii');
  buf.writeUInt8(1, 4);
  buf.writeUInt8(0, 5);
  buf.writeUInt16LE(channels, 6);
  buf.writeUInt32LE(height, 8);
  buf.writeUInt32LE(width, 12);
  Buffer.from(data.buffer, data.byteOffset, data.byteLength).copy(buf, HEADER_BYTES);
  writeFileSync(path, buf);
}

export function readNnpr(path: string): Raster {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES) {
    throw new NnprFormatError(`${path}: truncated header (${buf.length} bytes)`);
  }
  if (buf.readUInt32BE(0) !== MAGIC) {
    throw new NnprFormatError(`${path}: bad magic`);
  }
  const version = buf.readUInt8(4);
  const dtype = buf.readUInt8(5);
  if (version !== 1) throw new NnprFormatError(`${path}: unsupported version ${version}`);
  if (dtype !== 0) throw new NnprFormatError(`${path}: unsupported dtype code ${dtype}`);
  const channels = buf.readUInt16LE(6);
  const height = buf.readUInt32LE(8);
  const width = buf.readUInt32LE(12);
  const expected = HEADER_BYTES + 4 * channels * height * width;
  if (buf.length !== expected) {
    throw new NnprFormatError(
      `${path}: payload size mismatch (expected ${expected} bytes, got ${buf.length})`,
    );
  }
  const body = buf.subarray(HEADER_BYTES);
  const data = new Float32Array(body.buffer.slice(body.byteOffset, body.byteOffset + body.length));
  return { channels, height, width, data };
}
