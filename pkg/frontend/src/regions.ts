/**
 * Region evaluation mirroring the planner toolkit's semantics: descending
 * threshold sweep with 8-connectivity (start/goal force-included, all-true
 * fallback) and the label-cells / mask-area tightness metric.
 */

export interface ThresholdOutcome {
  td: number;
  mask: Uint8Array; // row-major booleans
  fallback: boolean;
}

export function thresholdGrid(tdStart = 0.95, tdStep = 0.05, tdMin = 0.05): number[] {
  const grid: number[] = [];
  const count = Math.floor((tdStart - tdMin) / tdStep + 1e-9) + 1;
  for (let k = 0; k < count; k++) {
    const td = Math.round((tdStart - k * tdStep) * 1e9) / 1e9;
    if (td >= tdMin - 1e-9) grid.push(td);
  }
  return grid;
}

const DX = [-1, 0, 1, -1, 1, -1, 0, 1];
const DY = [-1, -1, -1, 0, 0, 1, 1, 1];

export function connected(
  mask: Uint8Array,
  width: number,
  height: number,
  start: [number, number],
  goal: [number, number],
): boolean {
  const s = start[1] * width + start[0];
  const g = goal[1] * width + goal[0];
  if (!mask[s] || !mask[g]) return false;
  if (s === g) return true;
  const visited = new Uint8Array(width * height);
  const stack = new Int32Array(width * height);
  let top = 0;
  stack[top++] = s;
  visited[s] = 1;
  while (top > 0) {
    const u = stack[--top];
    const ux = u % width;
    const uy = (u - ux) / width;
    for (let k = 0; k < 8; k++) {
      const vx = ux + DX[k];
      const vy = uy + DY[k];
      if (vx < 0 || vx >= width || vy < 0 || vy >= height) continue;
      const v = vy * width + vx;
      if (visited[v] || !mask[v]) continue;
      if (v === g) return true;
      visited[v] = 1;
      stack[top++] = v;
    }
  }
  return false;
}

export function adaptiveThreshold(
  probs: Float32Array,
  width: number,
  height: number,
  start: [number, number],
  goal: [number, number],
): ThresholdOutcome {
  for (const td of thresholdGrid()) {
    const mask = new Uint8Array(width * height);
    for (let i = 0; i < mask.length; i++) mask[i] = probs[i] >= td ? 1 : 0;
    mask[start[1] * width + start[0]] = 1;
    mask[goal[1] * width + goal[0]] = 1;
    if (connected(mask, width, height, start, goal)) {
      return { td, mask, fallback: false };
    }
  }
  return { td: 0, mask: new Uint8Array(width * height).fill(1), fallback: true };
}

export function maskArea(mask: Uint8Array): number {
  let area = 0;
  for (let i = 0; i < mask.length; i++) area += mask[i];
  return area;
}

/** Label-path cell count over mask area; higher means a tighter region. */
export function modelMetric(labelCells: number, mask: Uint8Array): number {
  const area = maskArea(mask);
  if (area === 0) throw new Error('mask area must be positive');
  return labelCells / area;
}
