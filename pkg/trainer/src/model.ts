/**
 * Differentiable EVRNet mirror. Layer order, naming, and tensor shapes match
 * the inference engine's canonical enumeration (alignment, projection,
 * differential, fusion, heads; encoder -> CUs -> decoder inside a module), so
 * exported weight files load there with zero validation errors.
 */

import { Graph, Var } from "./autodiff.js";
import { counterUniform, STREAM_INIT } from "./rng.js";
import { Shape, Tensor } from "./tensor.js";

export const LATENT_CHANNELS = 2;
export const SE_REDUCTION = 4;

export type CuVariant = "single" | "multi";

export interface NetworkConfig {
  d: number;
  depths: [number, number, number];
  cuVariant: CuVariant;
  useSe: boolean;
  upsampleFactor: 1 | 2 | 4;
}

export const DEFAULT_CONFIG: NetworkConfig = {
  d: 32,
  depths: [5, 2, 2],
  cuVariant: "multi",
  useSe: true,
  upsampleFactor: 1,
};

export function validateConfig(cfg: NetworkConfig): void {
  if (cfg.depths.length !== 3 || cfg.depths.some((n) => n < 1)) {
    throw new Error(`depths must be three counts >= 1, got ${cfg.depths}`);
  }
  if (cfg.useSe && cfg.d % SE_REDUCTION !== 0) {
    throw new Error(`d (${cfg.d}) must be divisible by the SE reduction ${SE_REDUCTION}`);
  }
  const s2 = cfg.upsampleFactor * cfg.upsampleFactor;
  if (cfg.d % s2 !== 0) {
    throw new Error(`d (${cfg.d}) must be divisible by upsampleFactor^2 (${s2})`);
  }
}

export class Param {
  readonly v: Var;

  constructor(
    readonly name: string,
    readonly shape: Shape,
  ) {
    this.v = Var.of(new Tensor(shape));
  }

  get size(): number {
    return this.v.t.size;
  }
}

interface ConvShape {
  inCh: number;
  outCh: number;
  k: number;
  stride: number;
  groups: number;
}

export class Model {
  readonly params = new Map<string, Param>();
  private readonly convShapes = new Map<string, ConvShape>();

  constructor(readonly config: NetworkConfig) {
    validateConfig(config);
    const { d, depths, upsampleFactor: s } = config;
    this.module("alignment", 3 + 3 + LATENT_CHANNELS, depths[0]);
    this.conv("projection", 3, d, 3);
    this.act("projection.act", d);
    this.module("differential", d, depths[1]);
    this.module("fusion", d, depths[2]);
    this.conv("head.restore", d / (s * s), 3, 3);
    this.conv("head.latent", d, LATENT_CHANNELS, 1);
  }

  private addParam(name: string, shape: Shape): Param {
    const p = new Param(name, shape);
    this.params.set(name, p);
    return p;
  }

  private conv(name: string, inCh: number, outCh: number, k: number, stride = 1, groups = 1): void {
    this.addParam(`${name}.weight`, [outCh, inCh / groups, k, k]);
    this.addParam(`${name}.bias`, [outCh, 1, 1, 1]);
    this.convShapes.set(name, { inCh, outCh, k, stride, groups });
  }

  private act(name: string, c: number): void {
    this.addParam(`${name}.slope`, [c, 1, 1, 1]);
  }

  private cu(prefix: string): void {
    const { d, cuVariant, useSe } = this.config;
    if (cuVariant === "single") {
      this.conv(`${prefix}.dw7`, d, d, 7, 1, d);
    } else {
      this.conv(`${prefix}.dw3`, d, d, 3, 1, d);
      this.conv(`${prefix}.dw5`, d, d, 5, 1, d);
      this.conv(`${prefix}.dw7`, d, d, 7, 1, d);
    }
    this.act(`${prefix}.act`, d);
    if (useSe) {
      const cr = d / SE_REDUCTION;
      this.addParam(`${prefix}.se.w1`, [cr, d, 1, 1]);
      this.addParam(`${prefix}.se.b1`, [cr, 1, 1, 1]);
      this.addParam(`${prefix}.se.w2`, [d, cr, 1, 1]);
      this.addParam(`${prefix}.se.b2`, [d, 1, 1, 1]);
    }
    this.conv(`${prefix}.pw`, d, d, 1);
  }

  private module(name: string, inCh: number, nCu: number): void {
    const d = this.config.d;
    this.conv(`${name}.enc1`, inCh, d, 5);
    this.act(`${name}.enc1.act`, d);
    this.conv(`${name}.enc2`, d, d, 5, 2);
    this.act(`${name}.enc2.act`, d);
    this.conv(`${name}.enc3`, d, d, 1);
    this.act(`${name}.enc3.act`, d);
    for (let i = 0; i < nCu; i++) this.cu(`${name}.cu${i}`);
    this.conv(`${name}.dec`, 2 * d, d, 1);
    this.act(`${name}.dec.act`, d);
  }

  paramCount(): number {
    let total = 0;
    for (const p of this.params.values()) total += p.size;
    return total;
  }

  /** Uniform +-sqrt(6/fan_in) for weights, 0.25 slopes, zero biases. */
  initRandom(seed: number): void {
    let ordinal = 0;
    for (const p of this.params.values()) {
      const leaf = p.name.split(".").pop()!;
      if (leaf === "weight" || leaf === "w1" || leaf === "w2") {
        const fanIn = p.shape[1] * p.shape[2] * p.shape[3];
        const bound = Math.sqrt(6 / fanIn);
        for (let i = 0; i < p.size; i++) {
          p.v.t.data[i] = bound * (2 * counterUniform(seed, STREAM_INIT, ordinal, i, 0) - 1);
        }
      } else if (leaf === "slope") {
        p.v.t.data.fill(0.25);
      } else {
        p.v.t.data.fill(0);
      }
      ordinal++;
    }
  }

  zeroGrads(): void {
    for (const p of this.params.values()) p.v.grad.fill(0);
  }

  private p(name: string): Param {
    const p = this.params.get(name);
    if (!p) throw new Error(`unknown parameter ${name}`);
    return p;
  }

  private applyConv(g: Graph, name: string, x: Var): Var {
    const s = this.convShapes.get(name);
    if (!s) throw new Error(`unknown conv layer ${name}`);
    if (x.t.shape[1] !== s.inCh) {
      throw new Error(`${name}: input has ${x.t.shape[1]} channels, expected ${s.inCh}`);
    }
    return g.conv2d(x, this.p(`${name}.weight`).v, this.p(`${name}.bias`).v, {
      stride: s.stride,
      groups: s.groups,
    });
  }

  private applyAct(g: Graph, name: string, x: Var): Var {
    return g.prelu(x, this.p(`${name}.slope`).v);
  }

  private applyCu(g: Graph, prefix: string, x: Var): Var {
    let y: Var;
    if (this.config.cuVariant === "single") {
      y = this.applyConv(g, `${prefix}.dw7`, x);
    } else {
      y = g.add(
        g.add(this.applyConv(g, `${prefix}.dw3`, x), this.applyConv(g, `${prefix}.dw5`, x)),
        this.applyConv(g, `${prefix}.dw7`, x),
      );
    }
    y = this.applyAct(g, `${prefix}.act`, y);
    if (this.config.useSe) {
      y = g.se(
        y,
        this.p(`${prefix}.se.w1`).v,
        this.p(`${prefix}.se.b1`).v,
        this.p(`${prefix}.se.w2`).v,
        this.p(`${prefix}.se.b2`).v,
      );
    }
    y = this.applyConv(g, `${prefix}.pw`, y);
    return g.add(x, y);
  }

  private applyModule(g: Graph, name: string, nCu: number, x: Var): Var {
    const skip = this.applyAct(g, `${name}.enc1.act`, this.applyConv(g, `${name}.enc1`, x));
    let y = this.applyAct(g, `${name}.enc2.act`, this.applyConv(g, `${name}.enc2`, skip));
    y = this.applyAct(g, `${name}.enc3.act`, this.applyConv(g, `${name}.enc3`, y));
    for (let i = 0; i < nCu; i++) y = this.applyCu(g, `${name}.cu${i}`, y);
    const up = g.centerCrop(g.upsample2x(y), skip.t.shape[2], skip.t.shape[3]);
    return this.applyAct(g, `${name}.dec.act`, this.applyConv(g, `${name}.dec`, g.concatChannels(up, skip)));
  }

  forward(
    g: Graph,
    cur: Var,
    prevFrame: Var,
    prevLatent: Var,
  ): { restored: Var; latent: Var } {
    const { depths, upsampleFactor: s } = this.config;
    const stacked = g.concatChannels(g.concatChannels(cur, prevFrame), prevLatent);
    const aligned = this.applyModule(g, "alignment", depths[0], stacked);
    const projected = this.applyAct(g, "projection.act", this.applyConv(g, "projection", cur));
    const diff = this.applyModule(g, "differential", depths[1], g.sub(projected, aligned));
    const fused = this.applyModule(g, "fusion", depths[2], g.add(diff, projected));
    const shuffled = g.pixelShuffle(fused, s);
    const restored = this.applyConv(g, "head.restore", shuffled);
    const latent = this.applyConv(g, "head.latent", fused);
    return { restored, latent };
  }

  /** Convenience: inference-only forward from plain tensors. */
  infer(cur: Tensor, prevFrame: Tensor, prevLatent: Tensor): { restored: Tensor; latent: Tensor } {
    const g = new Graph();
    const out = this.forward(g, g.input(cur), g.input(prevFrame), g.input(prevLatent));
    return { restored: out.restored.t, latent: out.latent.t };
  }

  /** Auto-regressive restoration of a frame sequence (inference only). */
  restoreSequence(frames: Tensor[]): Tensor[] {
    if (frames.length === 0) throw new Error("restoreSequence: empty input");
    let prevFrame = frames[0];
    let prevLatent = new Tensor([1, LATENT_CHANNELS, frames[0].shape[2], frames[0].shape[3]]);
    const outputs: Tensor[] = [];
    for (const frame of frames) {
      const { restored, latent } = this.infer(frame, prevFrame, prevLatent);
      outputs.push(restored);
      prevFrame = frame;
      prevLatent = latent;
    }
    return outputs;
  }
}
