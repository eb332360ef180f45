/**
 * Minimal define-by-run autodiff over NCHW tensors.
 *
 * Every op computes its forward result eagerly and pushes a backward closure
 * onto the graph's tape; `backward()` replays the tape in reverse. Layer
 * semantics mirror the inference engine exactly: zero "same" padding of
 * (k-1)/2 per side, stride-2 output = ceil(input/2), bilinear 2x upsampling
 * with half-pixel centers and edge clamping, pixel shuffle with dy-major
 * channel ordering, and a squeeze-excitation gate with an inner relu and a
 * sigmoid output.
 */

import { Tensor } from "./tensor.js";

export class Var {
  constructor(
    public readonly t: Tensor,
    public readonly grad: Float64Array,
  ) {}

  static of(t: Tensor): Var {
    return new Var(t, new Float64Array(t.size));
  }
}

export interface ConvOpts {
  stride?: number;
  groups?: number;
}

export class Graph {
  private tape: Array<() => void> = [];

  private record(back: () => void): void {
    this.tape.push(back);
  }

  backward(): void {
    for (let i = this.tape.length - 1; i >= 0; i--) this.tape[i]();
  }

  reset(): void {
    this.tape = [];
  }

  input(t: Tensor): Var {
    return Var.of(t);
  }

  conv2d(x: Var, w: Var, b: Var | null, opts: ConvOpts = {}): Var {
    const stride = opts.stride ?? 1;
    const groups = opts.groups ?? 1;
    const [n, c, h, wd] = x.t.shape;
    const [oc, cg, kh, kw] = w.t.shape;
    if (c % groups !== 0 || cg !== c / groups) {
      throw new Error(`conv2d: weights [${w.t.shape}] do not fit ${c} channels / ${groups} groups`);
    }
    const ph = (kh - 1) >> 1;
    const pw = (kw - 1) >> 1;
    const ho = Math.floor((h - 1) / stride) + 1;
    const wo = Math.floor((wd - 1) / stride) + 1;
    const out = Var.of(new Tensor([n, oc, ho, wo]));
    const ocPerGroup = oc / groups;

    const X = x.t.data, W = w.t.data, O = out.t.data;
    const B = b ? b.t.data : null;
    for (let bi = 0; bi < n; bi++) {
      for (let o = 0; o < oc; o++) {
        const g = Math.floor(o / ocPerGroup);
        const cBase = g * cg;
        const wBase = o * cg * kh * kw;
        for (let oy = 0; oy < ho; oy++) {
          const iy0 = oy * stride - ph;
          for (let ox = 0; ox < wo; ox++) {
            const ix0 = ox * stride - pw;
            let acc = B ? B[o] : 0;
            for (let ci = 0; ci < cg; ci++) {
              const xPlane = ((bi * c + cBase + ci) * h) * wd;
              const wPlane = wBase + ci * kh * kw;
              for (let ky = 0; ky < kh; ky++) {
                const iy = iy0 + ky;
                if (iy < 0 || iy >= h) continue;
                const xRow = xPlane + iy * wd;
                const wRow = wPlane + ky * kw;
                for (let kx = 0; kx < kw; kx++) {
                  const ix = ix0 + kx;
                  if (ix < 0 || ix >= wd) continue;
                  acc += X[xRow + ix] * W[wRow + kx];
                }
              }
            }
            O[((bi * oc + o) * ho + oy) * wo + ox] = acc;
          }
        }
      }
    }

    this.record(() => {
      const dO = out.grad, dX = x.grad, dW = w.grad;
      const dB = b ? b.grad : null;
      for (let bi = 0; bi < n; bi++) {
        for (let o = 0; o < oc; o++) {
          const g = Math.floor(o / ocPerGroup);
          const cBase = g * cg;
          const wBase = o * cg * kh * kw;
          for (let oy = 0; oy < ho; oy++) {
            const iy0 = oy * stride - ph;
            for (let ox = 0; ox < wo; ox++) {
              const ix0 = ox * stride - pw;
              const grad = dO[((bi * oc + o) * ho + oy) * wo + ox];
              if (grad === 0) continue;
              if (dB) dB[o] += grad;
              for (let ci = 0; ci < cg; ci++) {
                const xPlane = ((bi * c + cBase + ci) * h) * wd;
                const wPlane = wBase + ci * kh * kw;
                for (let ky = 0; ky < kh; ky++) {
                  const iy = iy0 + ky;
                  if (iy < 0 || iy >= h) continue;
                  const xRow = xPlane + iy * wd;
                  const wRow = wPlane + ky * kw;
                  for (let kx = 0; kx < kw; kx++) {
                    const ix = ix0 + kx;
                    if (ix < 0 || ix >= wd) continue;
                    dX[xRow + ix] += grad * W[wRow + kx];
                    dW[wRow + kx] += grad * X[xRow + ix];
                  }
                }
              }
            }
          }
        }
      }
    });
    return out;
  }

  prelu(x: Var, slope: Var): Var {
    const [n, c, h, w] = x.t.shape;
    const plane = h * w;
    const out = Var.of(new Tensor(x.t.shape));
    const X = x.t.data, S = slope.t.data, O = out.t.data;
    for (let bi = 0; bi < n; bi++) {
      for (let ci = 0; ci < c; ci++) {
        const base = (bi * c + ci) * plane;
        const s = S[ci];
        for (let p = 0; p < plane; p++) {
          const v = X[base + p];
          O[base + p] = v > 0 ? v : s * v;
        }
      }
    }
    this.record(() => {
      const dO = out.grad, dX = x.grad, dS = slope.grad;
      for (let bi = 0; bi < n; bi++) {
        for (let ci = 0; ci < c; ci++) {
          const base = (bi * c + ci) * plane;
          const s = S[ci];
          let sAcc = 0;
          for (let p = 0; p < plane; p++) {
            const v = X[base + p];
            const g = dO[base + p];
            if (v > 0) {
              dX[base + p] += g;
            } else {
              dX[base + p] += s * g;
              sAcc += v * g;
            }
          }
          dS[ci] += sAcc;
        }
      }
    });
    return out;
  }

  se(x: Var, w1: Var, b1: Var, w2: Var, b2: Var): Var {
    const [n, c, h, w] = x.t.shape;
    const plane = h * w;
    const cr = w1.t.shape[0];
    const out = Var.of(new Tensor(x.t.shape));
    const X = x.t.data, O = out.t.data;
    const W1 = w1.t.data, W2 = w2.t.data, B1 = b1.t.data, B2 = b2.t.data;

    const squeeze = new Float64Array(n * c);
    const z = new Float64Array(n * cr);
    const act = new Float64Array(n * cr);
    const gate = new Float64Array(n * c);
    for (let bi = 0; bi < n; bi++) {
      for (let ci = 0; ci < c; ci++) {
        const base = (bi * c + ci) * plane;
        let acc = 0;
        for (let p = 0; p < plane; p++) acc += X[base + p];
        squeeze[bi * c + ci] = acc / plane;
      }
      for (let j = 0; j < cr; j++) {
        let acc = B1[j];
        for (let ci = 0; ci < c; ci++) acc += W1[j * c + ci] * squeeze[bi * c + ci];
        z[bi * cr + j] = acc;
        act[bi * cr + j] = acc > 0 ? acc : 0;
      }
      for (let ci = 0; ci < c; ci++) {
        let acc = B2[ci];
        for (let j = 0; j < cr; j++) acc += W2[ci * cr + j] * act[bi * cr + j];
        gate[bi * c + ci] = 1 / (1 + Math.exp(-acc));
      }
      for (let ci = 0; ci < c; ci++) {
        const base = (bi * c + ci) * plane;
        const g = gate[bi * c + ci];
        for (let p = 0; p < plane; p++) O[base + p] = X[base + p] * g;
      }
    }

    this.record(() => {
      const dO = out.grad, dX = x.grad;
      const dW1 = w1.grad, dW2 = w2.grad, dB1 = b1.grad, dB2 = b2.grad;
      for (let bi = 0; bi < n; bi++) {
        const dy = new Float64Array(c);
        for (let ci = 0; ci < c; ci++) {
          const base = (bi * c + ci) * plane;
          const g = gate[bi * c + ci];
          let dg = 0;
          for (let p = 0; p < plane; p++) {
            dg += dO[base + p] * X[base + p];
            dX[base + p] += dO[base + p] * g;
          }
          dy[ci] = dg * g * (1 - g);
        }
        const da = new Float64Array(cr);
        for (let ci = 0; ci < c; ci++) {
          dB2[ci] += dy[ci];
          for (let j = 0; j < cr; j++) {
            dW2[ci * cr + j] += dy[ci] * act[bi * cr + j];
            da[j] += dy[ci] * W2[ci * cr + j];
          }
        }
        const ds = new Float64Array(c);
        for (let j = 0; j < cr; j++) {
          const dz = z[bi * cr + j] > 0 ? da[j] : 0;
          dB1[j] += dz;
          for (let ci = 0; ci < c; ci++) {
            dW1[j * c + ci] += dz * squeeze[bi * c + ci];
            ds[ci] += dz * W1[j * c + ci];
          }
        }
        for (let ci = 0; ci < c; ci++) {
          const base = (bi * c + ci) * plane;
          const d = ds[ci] / plane;
          for (let p = 0; p < plane; p++) dX[base + p] += d;
        }
      }
    });
    return out;
  }

  upsample2x(x: Var): Var {
    const [n, c, h, w] = x.t.shape;
    const ho = 2 * h, wo = 2 * w;
    const out = Var.of(new Tensor([n, c, ho, wo]));

    const axis = (size: number) => {
      const i0 = new Int32Array(2 * size);
      const i1 = new Int32Array(2 * size);
      const f = new Float64Array(2 * size);
      for (let o = 0; o < 2 * size; o++) {
        let pos = (o + 0.5) / 2 - 0.5;
        pos = Math.min(Math.max(pos, 0), size - 1);
        const lo = Math.floor(pos);
        i0[o] = lo;
        i1[o] = Math.min(lo + 1, size - 1);
        f[o] = pos - lo;
      }
      return { i0, i1, f };
    };
    const ay = axis(h), ax = axis(w);
    const X = x.t.data, O = out.t.data;
    for (let bi = 0; bi < n; bi++) {
      for (let ci = 0; ci < c; ci++) {
        const inPlane = (bi * c + ci) * h * w;
        const outPlane = (bi * c + ci) * ho * wo;
        for (let oy = 0; oy < ho; oy++) {
          const y0 = ay.i0[oy], y1 = ay.i1[oy], fy = ay.f[oy];
          for (let ox = 0; ox < wo; ox++) {
            const x0 = ax.i0[ox], x1 = ax.i1[ox], fx = ax.f[ox];
            const top = X[inPlane + y0 * w + x0] * (1 - fx) + X[inPlane + y0 * w + x1] * fx;
            const bot = X[inPlane + y1 * w + x0] * (1 - fx) + X[inPlane + y1 * w + x1] * fx;
            O[outPlane + oy * wo + ox] = top * (1 - fy) + bot * fy;
          }
        }
      }
    }
    this.record(() => {
      const dO = out.grad, dX = x.grad;
      for (let bi = 0; bi < n; bi++) {
        for (let ci = 0; ci < c; ci++) {
          const inPlane = (bi * c + ci) * h * w;
          const outPlane = (bi * c + ci) * ho * wo;
          for (let oy = 0; oy < ho; oy++) {
            const y0 = ay.i0[oy], y1 = ay.i1[oy], fy = ay.f[oy];
            for (let ox = 0; ox < wo; ox++) {
              const x0 = ax.i0[ox], x1 = ax.i1[ox], fx = ax.f[ox];
              const g = dO[outPlane + oy * wo + ox];
              dX[inPlane + y0 * w + x0] += g * (1 - fy) * (1 - fx);
              dX[inPlane + y0 * w + x1] += g * (1 - fy) * fx;
              dX[inPlane + y1 * w + x0] += g * fy * (1 - fx);
              dX[inPlane + y1 * w + x1] += g * fy * fx;
            }
          }
        }
      }
    });
    return out;
  }

  centerCrop(x: Var, th: number, tw: number): Var {
    const [n, c, h, w] = x.t.shape;
    if (th === h && tw === w) return x;
    const top = (h - th) >> 1;
    const left = (w - tw) >> 1;
    const out = Var.of(new Tensor([n, c, th, tw]));
    const X = x.t.data, O = out.t.data;
    for (let bi = 0; bi < n; bi++) {
      for (let ci = 0; ci < c; ci++) {
        const inPlane = (bi * c + ci) * h * w;
        const outPlane = (bi * c + ci) * th * tw;
        for (let y = 0; y < th; y++) {
          for (let z = 0; z < tw; z++) {
            O[outPlane + y * tw + z] = X[inPlane + (top + y) * w + (left + z)];
          }
        }
      }
    }
    this.record(() => {
      for (let bi = 0; bi < n; bi++) {
        for (let ci = 0; ci < c; ci++) {
          const inPlane = (bi * c + ci) * h * w;
          const outPlane = (bi * c + ci) * th * tw;
          for (let y = 0; y < th; y++) {
            for (let z = 0; z < tw; z++) {
              x.grad[inPlane + (top + y) * w + (left + z)] += out.grad[outPlane + y * tw + z];
            }
          }
        }
      }
    });
    return out;
  }

  concatChannels(a: Var, b: Var): Var {
    const [n, ca, h, w] = a.t.shape;
    const cb = b.t.shape[1];
    const plane = h * w;
    const out = Var.of(new Tensor([n, ca + cb, h, w]));
    for (let bi = 0; bi < n; bi++) {
      out.t.data.set(a.t.data.subarray(bi * ca * plane, (bi + 1) * ca * plane), bi * (ca + cb) * plane);
      out.t.data.set(b.t.data.subarray(bi * cb * plane, (bi + 1) * cb * plane), (bi * (ca + cb) + ca) * plane);
    }
    this.record(() => {
      for (let bi = 0; bi < n; bi++) {
        const aBase = bi * ca * plane;
        const bBase = bi * cb * plane;
        const oBase = bi * (ca + cb) * plane;
        for (let i = 0; i < ca * plane; i++) a.grad[aBase + i] += out.grad[oBase + i];
        for (let i = 0; i < cb * plane; i++) b.grad[bBase + i] += out.grad[oBase + ca * plane + i];
      }
    });
    return out;
  }

  add(a: Var, b: Var): Var {
    const out = Var.of(new Tensor(a.t.shape));
    for (let i = 0; i < out.t.data.length; i++) out.t.data[i] = a.t.data[i] + b.t.data[i];
    this.record(() => {
      for (let i = 0; i < out.grad.length; i++) {
        a.grad[i] += out.grad[i];
        b.grad[i] += out.grad[i];
      }
    });
    return out;
  }

  sub(a: Var, b: Var): Var {
    const out = Var.of(new Tensor(a.t.shape));
    for (let i = 0; i < out.t.data.length; i++) out.t.data[i] = a.t.data[i] - b.t.data[i];
    this.record(() => {
      for (let i = 0; i < out.grad.length; i++) {
        a.grad[i] += out.grad[i];
        b.grad[i] -= out.grad[i];
      }
    });
    return out;
  }

  pixelShuffle(x: Var, s: number): Var {
    if (s === 1) return x;
    const [n, c, h, w] = x.t.shape;
    if (c % (s * s) !== 0) throw new Error(`pixelShuffle: ${c} channels not divisible by ${s * s}`);
    const co = c / (s * s);
    const out = Var.of(new Tensor([n, co, h * s, w * s]));
    const map = (bi: number, ci: number, dy: number, dx: number, y: number, z: number) => {
      const src = ((bi * c + ci * s * s + dy * s + dx) * h + y) * w + z;
      const dst = ((bi * co + ci) * h * s + y * s + dy) * w * s + z * s + dx;
      return [src, dst] as const;
    };
    for (let bi = 0; bi < n; bi++)
      for (let ci = 0; ci < co; ci++)
        for (let dy = 0; dy < s; dy++)
          for (let dx = 0; dx < s; dx++)
            for (let y = 0; y < h; y++)
              for (let z = 0; z < w; z++) {
                const [src, dst] = map(bi, ci, dy, dx, y, z);
                out.t.data[dst] = x.t.data[src];
              }
    this.record(() => {
      for (let bi = 0; bi < n; bi++)
        for (let ci = 0; ci < co; ci++)
          for (let dy = 0; dy < s; dy++)
            for (let dx = 0; dx < s; dx++)
              for (let y = 0; y < h; y++)
                for (let z = 0; z < w; z++) {
                  const [src, dst] = map(bi, ci, dy, dx, y, z);
                  x.grad[src] += out.grad[dst];
                }
    });
    return out;
  }

  /** Mean absolute error; seeds the tape with dLoss/dPred. */
  l1Loss(pred: Var, target: Tensor): number {
    const n = pred.t.size;
    let acc = 0;
    for (let i = 0; i < n; i++) acc += Math.abs(pred.t.data[i] - target.data[i]);
    const loss = acc / n;
    this.record(() => {
      for (let i = 0; i < n; i++) {
        const d = pred.t.data[i] - target.data[i];
        pred.grad[i] += (d > 0 ? 1 : d < 0 ? -1 : 0) / n;
      }
    });
    return loss;
  }
}
