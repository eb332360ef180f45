/**
 * Toy-scale denoising training: short clips, two-step truncated
 * backpropagation through the recurrent state, L1 loss, Adam with warmup and
 * step halving, then EVRW export for the inference engine.
 */

import { Adam, learningRate } from "./adam.js";
import { Graph } from "./autodiff.js";
import { ClipPair, ClipSpec, DegradeSpec, augmentPair, makeDataset } from "./data.js";
import { exportWeights } from "./evrw.js";
import { Model, NetworkConfig } from "./model.js";
import { Rng } from "./rng.js";
import { clip01, psnr, Tensor } from "./tensor.js";

export interface TrainOpts {
  steps: number;
  cropSize: number;
  bpttLength: number;
  seed: number;
  peakLr?: number;
  logEvery?: number;
  log?: (line: string) => void;
}

export interface TrainResult {
  losses: number[];
  finalLoss: number;
  initialLoss: number;
}

export async function trainToy(
  model: Model,
  dataset: ClipPair[],
  opts: TrainOpts,
): Promise<TrainResult> {
  if (dataset.length === 0) throw new Error("trainToy: empty dataset");
  const log = opts.log ?? ((line: string) => console.log(line));
  const logEvery = opts.logEvery ?? 1;
  const optimizer = new Adam(model, { weightDecay: 1e-6 });
  const rng = new Rng(opts.seed, 18);
  const losses: number[] = [];

  for (let step = 1; step <= opts.steps; step++) {
    // keep the event loop serviced during long CPU-bound runs
    if (step % 10 === 0) await new Promise<void>((r) => setImmediate(r));
    optimizer.lr = learningRate(step, opts.steps, { peakLr: opts.peakLr });
    const pair = augmentPair(
      dataset[rng.int(dataset.length)],
      opts.cropSize,
      opts.cropSize,
      rng,
    );
    const t0 = rng.int(pair.clean.length - opts.bpttLength + 1);

    const g = new Graph();
    model.zeroGrads();
    let prevFrame = g.input(pair.degraded[t0 === 0 ? 0 : t0 - 1]);
    let prevLatent = g.input(
      new Tensor([1, 2, opts.cropSize, opts.cropSize]),
    );
    let loss = 0;
    for (let k = 0; k < opts.bpttLength; k++) {
      const cur = g.input(pair.degraded[t0 + k]);
      const { restored, latent } = model.forward(g, cur, prevFrame, prevLatent);
      loss += g.l1Loss(restored, pair.clean[t0 + k]) / opts.bpttLength;
      prevFrame = cur;
      prevLatent = latent;
    }
    g.backward();
    if (!Number.isFinite(loss)) {
      throw new Error(`training diverged at step ${step}: loss ${loss}`);
    }
    optimizer.step();
    losses.push(loss);
    if (step % logEvery === 0 || step === 1 || step === opts.steps) {
      log(`step ${step}/${opts.steps}  lr ${optimizer.lr.toExponential(2)}  L1 ${loss.toFixed(5)}`);
    }
  }
  return { losses, finalLoss: losses[losses.length - 1], initialLoss: losses[0] };
}

export interface EvalResult {
  restoredPsnr: number;
  degradedPsnr: number;
  gainDb: number;
}

export function evaluateHeldOut(model: Model, clips: ClipPair[]): EvalResult {
  let restoredSum = 0;
  let degradedSum = 0;
  let count = 0;
  for (const clip of clips) {
    const outputs = model.restoreSequence(clip.degraded);
    for (let t = 0; t < clip.clean.length; t++) {
      // clamp like the engine's 8-bit output path before scoring
      restoredSum += psnr(clip01(outputs[t]), clip.clean[t]);
      degradedSum += psnr(clip.degraded[t], clip.clean[t]);
      count++;
    }
  }
  const restoredPsnr = restoredSum / count;
  const degradedPsnr = degradedSum / count;
  return { restoredPsnr, degradedPsnr, gainDb: restoredPsnr - degradedPsnr };
}

export const TOY_CONFIG: NetworkConfig = {
  d: 8,
  depths: [1, 1, 1],
  cuVariant: "single",
  useSe: true,
  upsampleFactor: 1,
};

export const TOY_CLIP: ClipSpec = { frames: 8, height: 48, width: 48 };
export const TOY_DEGRADE: DegradeSpec = { awgnVar: 0.02, snpDensity: 0, seed: 7 };

interface CliOpts {
  steps: number;
  out: string;
  seed: number;
}

function parseArgs(argv: string[]): CliOpts {
  const opts: CliOpts = { steps: 1200, out: "toy_weights.evrw", seed: 7 };
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--steps") opts.steps = Number(argv[++i]);
    else if (argv[i] === "--out") opts.out = argv[++i];
    else if (argv[i] === "--seed") opts.seed = Number(argv[++i]);
    else throw new Error(`unknown flag ${argv[i]}`);
  }
  return opts;
}

export async function main(argv: string[]): Promise<number> {
  const opts = parseArgs(argv);
  const degrade: DegradeSpec = { ...TOY_DEGRADE, seed: opts.seed };
  console.log(`generating toy dataset (seed ${opts.seed})`);
  const trainSet = makeDataset(opts.seed, 12, TOY_CLIP, degrade, 0);
  const heldOut = makeDataset(opts.seed, 3, TOY_CLIP, degrade, 100);

  const model = new Model(TOY_CONFIG);
  model.initRandom(opts.seed);
  console.log(`model: ${model.paramCount()} parameters`);

  const result = await trainToy(model, trainSet, {
    steps: opts.steps,
    cropSize: 32,
    bpttLength: 2,
    seed: opts.seed,
    logEvery: 10,
  });
  console.log(`L1 ${result.initialLoss.toFixed(5)} -> ${result.finalLoss.toFixed(5)}`);

  const evalResult = evaluateHeldOut(model, heldOut);
  console.log(
    `held-out PSNR: degraded ${evalResult.degradedPsnr.toFixed(2)} dB, ` +
      `restored ${evalResult.restoredPsnr.toFixed(2)} dB (gain ${evalResult.gainDb.toFixed(2)} dB)`,
  );

  exportWeights(model, opts.out);
  console.log(`weights exported to ${opts.out}`);
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("train.js") || entry.endsWith("train.ts")) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      console.error(err instanceof Error ? err.message : err);
      process.exit(1);
    },
  );
}
