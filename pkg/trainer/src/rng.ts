/**
 * Counter-based random generator matching the engine's documented definition
 * (murmur3 finalizer chain over seed/stream/frame/index/draw; uniform draw
 * maps the final u32 to (u + 0.5) / 2^32). Uniform draws here are bit-exact
 * against the engine; Gaussian draws share the Box-Muller formula and agree
 * up to libm rounding.
 */

export const STREAM_AWGN = 1;
export const STREAM_SNP = 2;
// Streams >= 16 are trainer-local (weight init, data synthesis, shuffling).
export const STREAM_INIT = 16;
export const STREAM_DATA = 17;

function mix(h: number): number {
  h >>>= 0;
  h ^= h >>> 16;
  h = Math.imul(h, 0x85ebca6b) >>> 0;
  h ^= h >>> 13;
  h = Math.imul(h, 0xc2b2ae35) >>> 0;
  h ^= h >>> 16;
  return h >>> 0;
}

export function counterU32(
  seed: number,
  stream: number,
  frame: number,
  index: number,
  draw: number,
): number {
  const lo = seed >>> 0;
  const hi = Math.floor(seed / 4294967296) >>> 0;
  let h = mix((lo ^ 0x9e3779b9) >>> 0);
  h = mix((h ^ hi) >>> 0);
  h = mix((h ^ (stream >>> 0)) >>> 0);
  h = mix((h ^ (frame >>> 0)) >>> 0);
  h = mix((h ^ (index >>> 0)) >>> 0);
  h = mix((h ^ (draw >>> 0)) >>> 0);
  return h;
}

export function counterUniform(
  seed: number,
  stream: number,
  frame: number,
  index: number,
  draw: number,
): number {
  return (counterU32(seed, stream, frame, index, draw) + 0.5) * 2 ** -32;
}

export function counterGaussian(seed: number, stream: number, frame: number, index: number): number {
  const u1 = counterUniform(seed, stream, frame, index, 0);
  const u2 = counterUniform(seed, stream, frame, index, 1);
  return Math.sqrt(-2 * Math.log(u1)) * Math.cos(2 * Math.PI * u2);
}

/** Sequential convenience stream built on the counter generator. */
export class Rng {
  private n = 0;

  constructor(
    private readonly seed: number,
    private readonly stream: number,
    private readonly frame = 0,
  ) {}

  uniform(): number {
    return counterUniform(this.seed, this.stream, this.frame, this.n++, 0);
  }

  range(lo: number, hi: number): number {
    return lo + (hi - lo) * this.uniform();
  }

  int(n: number): number {
    return Math.min(n - 1, Math.floor(this.uniform() * n));
  }
}
