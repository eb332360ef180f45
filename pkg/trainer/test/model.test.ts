import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, test } from "vitest";

import { exportWeights, loadModel, readWeights } from "../src/evrw.js";
import { Model, NetworkConfig } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { Tensor } from "../src/tensor.js";

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "../..");
const PY_ENV = { ...process.env, PYTHONPATH: path.join(REPO_ROOT, "src") };

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "evrnet-model-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

const CFG: NetworkConfig = {
  d: 8,
  depths: [1, 1, 1],
  cuVariant: "single",
  useSe: true,
  upsampleFactor: 1,
};

function randFrame(rng: Rng, h = 16, w = 16): Tensor {
  const t = new Tensor([1, 3, h, w]);
  for (let i = 0; i < t.size; i++) t.data[i] = rng.uniform();
  return t;
}

function runEngine(args: string[]): string {
  return execFileSync("python3", ["-m", "evrnet", ...args], { env: PY_ENV }).toString();
}

describe("model structure", () => {
  test("zero-weight model produces zero outputs", () => {
    const model = new Model(CFG); // params default to zero
    const rng = new Rng(0, 20);
    const frame = randFrame(rng);
    const { restored, latent } = model.infer(frame, frame, new Tensor([1, 2, 16, 16]));
    for (const v of restored.data) expect(v).toBe(0);
    for (const v of latent.data) expect(v).toBe(0);
  });

  test("parameter count equals the engine audit", () => {
    for (const cfg of [
      CFG,
      { ...CFG, cuVariant: "multi" as const },
      { ...CFG, d: 16, depths: [2, 1, 2] as [number, number, number], useSe: false },
    ]) {
      const model = new Model(cfg);
      const out = runEngine([
        "audit",
        "--d", String(cfg.d),
        "--depths", ...cfg.depths.map(String),
        "--cu-variant", cfg.cuVariant,
        cfg.useSe ? "--se" : "--no-se",
        "--scale", String(cfg.upsampleFactor),
        "--height", "16", "--width", "16",
        "--format", "kv",
      ]);
      const match = out.match(/^total\.params=(\d+)$/m);
      expect(match).not.toBeNull();
      expect(model.paramCount()).toBe(Number(match![1]));
    }
  });

  test("init is seed-deterministic", () => {
    const a = new Model(CFG);
    const b = new Model(CFG);
    a.initRandom(5);
    b.initRandom(5);
    for (const [name, p] of a.params) {
      expect(p.v.t.data).toEqual(b.params.get(name)!.v.t.data);
    }
    b.initRandom(6);
    let differs = false;
    for (const [name, p] of a.params) {
      if (!p.v.t.data.every((v, i) => v === b.params.get(name)!.v.t.data[i])) differs = true;
    }
    expect(differs).toBe(true);
  });
});

describe("EVRW export", () => {
  test("export then TS read round-trips config and entries", () => {
    const model = new Model(CFG);
    model.initRandom(1);
    const p = path.join(tmp, "roundtrip.evrw");
    exportWeights(model, p);
    const back = readWeights(p);
    expect(back.config).toEqual(CFG);
    expect(back.entries.size).toBe(model.params.size);
    const reload = loadModel(p);
    for (const [name, param] of model.params) {
      const loaded = reload.params.get(name)!;
      for (let i = 0; i < param.size; i++) {
        expect(loaded.v.t.data[i]).toBe(Math.fround(param.v.t.data[i]));
      }
    }
  });

  test("re-export without training is byte-identical", () => {
    const model = new Model(CFG);
    model.initRandom(2);
    const p1 = path.join(tmp, "a.evrw");
    const p2 = path.join(tmp, "b.evrw");
    exportWeights(model, p1);
    exportWeights(model, p2);
    expect(fs.readFileSync(p1).equals(fs.readFileSync(p2))).toBe(true);
  });

  test("engine loads the export with zero validation errors", () => {
    const model = new Model({ ...CFG, cuVariant: "multi" });
    model.initRandom(3);
    const wpath = path.join(tmp, "engine.evrw");
    exportWeights(model, wpath);
    const script =
      "import sys; from evrnet import load_weights; " +
      `store = load_weights(${JSON.stringify(wpath)}); store.validate(); ` +
      "print(len(store.entries))";
    const out = execFileSync("python3", ["-c", script], { env: PY_ENV }).toString();
    expect(Number(out.trim())).toBe(model.params.size);
  });

  test("truncated or renamed files are rejected", () => {
    const model = new Model(CFG);
    model.initRandom(4);
    const p = path.join(tmp, "broken.evrw");
    exportWeights(model, p);
    const whole = fs.readFileSync(p);
    fs.writeFileSync(p, whole.subarray(0, whole.length - 10));
    expect(() => loadModel(p)).toThrow();
  });
});
