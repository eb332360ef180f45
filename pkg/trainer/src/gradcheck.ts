/** Central finite-difference gradient checking against the tape. */

import { Graph } from "./autodiff.js";
import { Model } from "./model.js";
import { Tensor } from "./tensor.js";

export interface GradCheckCase {
  name: string;
  index: number;
  analytic: number;
  numeric: number;
  relError: number;
}

function lossOf(model: Model, cur: Tensor, prevFrame: Tensor, prevLatent: Tensor, target: Tensor): number {
  const g = new Graph();
  const { restored } = model.forward(g, g.input(cur), g.input(prevFrame), g.input(prevLatent));
  let acc = 0;
  for (let i = 0; i < restored.t.size; i++) acc += Math.abs(restored.t.data[i] - target.data[i]);
  return acc / restored.t.size;
}

/**
 * Compare analytic dLoss/dw against central differences for `count`
 * parameters sampled across distinct layers.
 */
export function gradCheck(
  model: Model,
  cur: Tensor,
  prevFrame: Tensor,
  prevLatent: Tensor,
  target: Tensor,
  count: number,
  pick: (paramCount: number, size: number, k: number) => number = (pc, size, k) =>
    (k * 7919) % size,
): GradCheckCase[] {
  const g = new Graph();
  model.zeroGrads();
  const { restored } = model.forward(g, g.input(cur), g.input(prevFrame), g.input(prevLatent));
  g.l1Loss(restored, target);
  g.backward();

  const params = [...model.params.values()];
  const cases: GradCheckCase[] = [];
  for (let k = 0; k < count; k++) {
    const p = params[(k * 13) % params.length];
    const idx = pick(params.length, p.size, k);
    const analytic = p.v.grad[idx];
    const saved = p.v.t.data[idx];
    const h = 1e-5 * Math.max(1, Math.abs(saved));
    p.v.t.data[idx] = saved + h;
    const up = lossOf(model, cur, prevFrame, prevLatent, target);
    p.v.t.data[idx] = saved - h;
    const down = lossOf(model, cur, prevFrame, prevLatent, target);
    p.v.t.data[idx] = saved;
    const numeric = (up - down) / (2 * h);
    const denom = Math.max(Math.abs(analytic), Math.abs(numeric), 1e-8);
    cases.push({
      name: p.name,
      index: idx,
      analytic,
      numeric,
      relError: Math.abs(analytic - numeric) / denom,
    });
  }
  return cases;
}
