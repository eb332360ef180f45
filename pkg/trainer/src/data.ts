/**
 * Procedural toy clips: moving rectangles and disks over smooth gradient
 * backgrounds, plus their degraded counterparts. Degradations reuse the
 * engine's counter-based generator keyed by (seed, global frame index), so a
 * clip is byte-reproducible from (seed, spec) alone and frames never couple.
 */

import { counterGaussian, counterUniform, Rng, STREAM_AWGN, STREAM_DATA, STREAM_SNP } from "./rng.js";
import { clip01, Tensor } from "./tensor.js";

export interface ClipSpec {
  frames: number;
  height: number;
  width: number;
}

export interface DegradeSpec {
  awgnVar: number;
  snpDensity: number;
  seed: number;
}

interface Shape2D {
  kind: "rect" | "disk";
  x: number;
  y: number;
  size: number;
  vx: number;
  vy: number;
  color: [number, number, number];
}

export function makeCleanClip(seed: number, clipIndex: number, spec: ClipSpec): Tensor[] {
  const rng = new Rng(seed, STREAM_DATA, clipIndex);
  const { frames, height: h, width: w } = spec;

  const gx = rng.range(-0.3, 0.3);
  const gy = rng.range(-0.3, 0.3);
  const base: [number, number, number] = [rng.range(0.2, 0.8), rng.range(0.2, 0.8), rng.range(0.2, 0.8)];

  const nShapes = 2 + rng.int(2);
  const shapes: Shape2D[] = [];
  for (let i = 0; i < nShapes; i++) {
    shapes.push({
      kind: rng.uniform() < 0.5 ? "rect" : "disk",
      x: rng.range(0, w),
      y: rng.range(0, h),
      size: rng.range(0.12, 0.3) * Math.min(h, w),
      vx: rng.range(-2.5, 2.5),
      vy: rng.range(-2.5, 2.5),
      color: [rng.uniform(), rng.uniform(), rng.uniform()],
    });
  }

  const out: Tensor[] = [];
  for (let t = 0; t < frames; t++) {
    const frame = new Tensor([1, 3, h, w]);
    for (let c = 0; c < 3; c++) {
      const plane = c * h * w;
      for (let y = 0; y < h; y++) {
        for (let x = 0; x < w; x++) {
          frame.data[plane + y * w + x] = base[c] + gx * (x / w - 0.5) + gy * (y / h - 0.5);
        }
      }
    }
    for (const s of shapes) {
      const cx = s.x + s.vx * t;
      const cy = s.y + s.vy * t;
      const r = s.size / 2;
      const y0 = Math.max(0, Math.floor(cy - r));
      const y1 = Math.min(h - 1, Math.ceil(cy + r));
      const x0 = Math.max(0, Math.floor(cx - r));
      const x1 = Math.min(w - 1, Math.ceil(cx + r));
      for (let y = y0; y <= y1; y++) {
        for (let x = x0; x <= x1; x++) {
          const inside =
            s.kind === "rect" || (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
          if (!inside) continue;
          for (let c = 0; c < 3; c++) {
            frame.data[(c * h + y) * w + x] = s.color[c];
          }
        }
      }
    }
    out.push(clip01(frame));
  }
  return out;
}

export function addAwgn(frame: Tensor, variance: number, seed: number, frameIndex: number): Tensor {
  if (variance === 0) return frame.clone();
  const sigma = Math.sqrt(variance);
  const out = frame.clone();
  for (let i = 0; i < out.data.length; i++) {
    const v = out.data[i] + sigma * counterGaussian(seed, STREAM_AWGN, frameIndex, i);
    out.data[i] = Math.min(1, Math.max(0, v));
  }
  return out;
}

export function addSaltPepper(frame: Tensor, density: number, seed: number, frameIndex: number): Tensor {
  if (density === 0) return frame.clone();
  const [, c, h, w] = frame.shape;
  const out = frame.clone();
  for (let p = 0; p < h * w; p++) {
    if (counterUniform(seed, STREAM_SNP, frameIndex, p, 0) >= density) continue;
    const value = counterUniform(seed, STREAM_SNP, frameIndex, p, 1) < 0.5 ? 1 : 0;
    for (let ci = 0; ci < c; ci++) out.data[ci * h * w + p] = value;
  }
  return out;
}

export function degradeClip(clean: Tensor[], spec: DegradeSpec, firstFrameIndex: number): Tensor[] {
  return clean.map((frame, t) => {
    let out = addAwgn(frame, spec.awgnVar, spec.seed, firstFrameIndex + t);
    if (spec.snpDensity > 0) out = addSaltPepper(out, spec.snpDensity, spec.seed, firstFrameIndex + t);
    return out;
  });
}

export interface ClipPair {
  clean: Tensor[];
  degraded: Tensor[];
}

export function makeDataset(
  seed: number,
  nClips: number,
  clipSpec: ClipSpec,
  degrade: DegradeSpec,
  firstClipIndex = 0,
): ClipPair[] {
  const out: ClipPair[] = [];
  for (let i = 0; i < nClips; i++) {
    const clipIndex = firstClipIndex + i;
    const clean = makeCleanClip(seed, clipIndex, clipSpec);
    const degraded = degradeClip(clean, degrade, clipIndex * clipSpec.frames);
    out.push({ clean, degraded });
  }
  return out;
}

/** Random crop + horizontal flip applied identically to both sequences. */
export function augmentPair(
  pair: { clean: Tensor[]; degraded: Tensor[] },
  cropH: number,
  cropW: number,
  rng: Rng,
): ClipPair {
  const [, , h, w] = pair.clean[0].shape;
  const top = rng.int(h - cropH + 1);
  const left = rng.int(w - cropW + 1);
  const flip = rng.uniform() < 0.5;
  const cropOne = (t: Tensor): Tensor => {
    const out = new Tensor([1, 3, cropH, cropW]);
    for (let c = 0; c < 3; c++) {
      for (let y = 0; y < cropH; y++) {
        for (let x = 0; x < cropW; x++) {
          const sx = flip ? left + cropW - 1 - x : left + x;
          out.data[(c * cropH + y) * cropW + x] = t.data[(c * h + top + y) * w + sx];
        }
      }
    }
    return out;
  };
  return { clean: pair.clean.map(cropOne), degraded: pair.degraded.map(cropOne) };
}

/** Parse the engine's line-delimited degradation manifest. */
export function parseManifest(text: string): DegradeSpec {
  const kv = new Map<string, string>();
  for (const line of text.trim().split(/\r?\n/)) {
    const idx = line.indexOf("=");
    if (idx > 0) kv.set(line.slice(0, idx).trim(), line.slice(idx + 1).trim());
  }
  return {
    awgnVar: Number(kv.get("awgn_var") ?? 0),
    snpDensity: Number(kv.get("snp_density") ?? 0),
    seed: Number(kv.get("seed") ?? 0),
  };
}
