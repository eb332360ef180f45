/**
 * Dense NCHW tensors backed by Float64Array. Training runs in double
 * precision; weights are down-converted to float32 only at export time.
 */

export type Shape = [number, number, number, number];

export class Tensor {
  readonly shape: Shape;
  readonly data: Float64Array;

  constructor(shape: Shape, data?: Float64Array) {
    const size = shape[0] * shape[1] * shape[2] * shape[3];
    if (shape.some((d) => d < 1 || !Number.isInteger(d))) {
      throw new Error(`bad tensor shape [${shape}]`);
    }
    if (data !== undefined && data.length !== size) {
      throw new Error(`data length ${data.length} != shape size ${size}`);
    }
    this.shape = [shape[0], shape[1], shape[2], shape[3]];
    this.data = data ?? new Float64Array(size);
  }

  get size(): number {
    const [n, c, h, w] = this.shape;
    return n * c * h * w;
  }

  clone(): Tensor {
    return new Tensor(this.shape, this.data.slice());
  }

  static zerosLike(t: Tensor): Tensor {
    return new Tensor(t.shape);
  }

  static full(shape: Shape, value: number): Tensor {
    const t = new Tensor(shape);
    t.data.fill(value);
    return t;
  }
}

export function assertSameShape(a: Tensor, b: Tensor, op: string): void {
  for (let i = 0; i < 4; i++) {
    if (a.shape[i] !== b.shape[i]) {
      throw new Error(`${op}: shape mismatch [${a.shape}] vs [${b.shape}]`);
    }
  }
}

export function maxAbsDiff(a: Tensor, b: Tensor): number {
  assertSameShape(a, b, "maxAbsDiff");
  let m = 0;
  for (let i = 0; i < a.data.length; i++) {
    const d = Math.abs(a.data[i] - b.data[i]);
    if (d > m) m = d;
  }
  return m;
}

export function mse(a: Tensor, b: Tensor): number {
  assertSameShape(a, b, "mse");
  let acc = 0;
  for (let i = 0; i < a.data.length; i++) {
    const d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / a.data.length;
}

export function psnr(a: Tensor, b: Tensor, peak = 1.0): number {
  const m = mse(a, b);
  if (m === 0) return Infinity;
  return 10 * Math.log10((peak * peak) / m);
}

export function clip01(t: Tensor): Tensor {
  const out = t.clone();
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = Math.min(1, Math.max(0, out.data[i]));
  }
  return out;
}
