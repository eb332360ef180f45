/**
 * Adam with L2 weight decay and the training schedule: learning rate grows
 * linearly from 1e-7 to the peak over the first 100 iterations, then halves
 * at 30/50/70/90 percent of the total step budget.
 */

import { Model, Param } from "./model.js";

export interface AdamOpts {
  lr?: number;
  beta1?: number;
  beta2?: number;
  eps?: number;
  weightDecay?: number;
}

export class Adam {
  private readonly m = new Map<Param, Float64Array>();
  private readonly v = new Map<Param, Float64Array>();
  private t = 0;
  lr: number;
  readonly beta1: number;
  readonly beta2: number;
  readonly eps: number;
  readonly weightDecay: number;

  constructor(
    private readonly model: Model,
    opts: AdamOpts = {},
  ) {
    this.lr = opts.lr ?? 1e-3;
    this.beta1 = opts.beta1 ?? 0.9;
    this.beta2 = opts.beta2 ?? 0.999;
    this.eps = opts.eps ?? 1e-8;
    this.weightDecay = opts.weightDecay ?? 1e-6;
    for (const p of model.params.values()) {
      this.m.set(p, new Float64Array(p.size));
      this.v.set(p, new Float64Array(p.size));
    }
  }

  step(): void {
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (const p of this.model.params.values()) {
      const m = this.m.get(p)!;
      const v = this.v.get(p)!;
      const w = p.v.t.data;
      const g = p.v.grad;
      for (let i = 0; i < w.length; i++) {
        const grad = g[i] + this.weightDecay * w[i];
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * grad;
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * grad * grad;
        w[i] -= (this.lr * (m[i] / bc1)) / (Math.sqrt(v[i] / bc2) + this.eps);
      }
    }
  }
}

export interface ScheduleOpts {
  peakLr?: number;
  warmupStart?: number;
  warmupSteps?: number;
}

/** Learning rate at 1-based step `t` of `totalSteps`. */
export function learningRate(t: number, totalSteps: number, opts: ScheduleOpts = {}): number {
  const peak = opts.peakLr ?? 1e-3;
  const start = opts.warmupStart ?? 1e-7;
  const warmup = opts.warmupSteps ?? 100;
  if (t <= warmup) {
    return start + ((peak - start) * t) / warmup;
  }
  let lr = peak;
  for (const frac of [0.3, 0.5, 0.7, 0.9]) {
    if (t > Math.floor(frac * totalSteps)) lr *= 0.5;
  }
  return lr;
}
