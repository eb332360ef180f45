/**
 * EVRW weight files and EVRT raw tensor files (both little-endian, float32),
 * matching the inference engine's on-disk formats byte for byte.
 */

import * as fs from "node:fs";

import { CuVariant, Model, NetworkConfig } from "./model.js";
import { Shape, Tensor } from "./tensor.js";

const EVRW_MAGIC = "EVRW";
const EVRT_MAGIC = "EVRT";
const VERSION = 1;
const CU_CODE: Record<CuVariant, number> = { single: 0, multi: 1 };

export function exportWeights(model: Model, path: string): void {
  const cfg = model.config;
  const chunks: Buffer[] = [];
  const head = Buffer.alloc(4 + 4 + 16 + 4 + 4);
  head.write(EVRW_MAGIC, 0, "ascii");
  head.writeUInt32LE(VERSION, 4);
  head.writeUInt32LE(cfg.d, 8);
  head.writeUInt32LE(cfg.depths[0], 12);
  head.writeUInt32LE(cfg.depths[1], 16);
  head.writeUInt32LE(cfg.depths[2], 20);
  head.writeUInt8(CU_CODE[cfg.cuVariant], 24);
  head.writeUInt8(cfg.useSe ? 1 : 0, 25);
  head.writeUInt8(cfg.upsampleFactor, 26);
  head.writeUInt8(0, 27);
  head.writeUInt32LE(model.params.size, 28);
  chunks.push(head);

  for (const p of model.params.values()) {
    const name = Buffer.from(p.name, "utf-8");
    const meta = Buffer.alloc(2 + name.length + 16);
    meta.writeUInt16LE(name.length, 0);
    name.copy(meta, 2);
    for (let i = 0; i < 4; i++) meta.writeUInt32LE(p.shape[i], 2 + name.length + 4 * i);
    chunks.push(meta);
    const payload = Buffer.alloc(4 * p.size);
    for (let i = 0; i < p.size; i++) payload.writeFloatLE(Math.fround(p.v.t.data[i]), 4 * i);
    chunks.push(payload);
  }
  fs.writeFileSync(path, Buffer.concat(chunks));
}

export interface LoadedWeights {
  config: NetworkConfig;
  entries: Map<string, Tensor>;
}

export function readWeights(path: string): LoadedWeights {
  const buf = fs.readFileSync(path);
  if (buf.length < 32 || buf.toString("ascii", 0, 4) !== EVRW_MAGIC) {
    throw new Error(`${path}: not an EVRW file`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`${path}: unsupported version ${version}`);
  const cuCode = buf.readUInt8(24);
  const config: NetworkConfig = {
    d: buf.readUInt32LE(8),
    depths: [buf.readUInt32LE(12), buf.readUInt32LE(16), buf.readUInt32LE(20)],
    cuVariant: cuCode === 0 ? "single" : "multi",
    useSe: buf.readUInt8(25) === 1,
    upsampleFactor: buf.readUInt8(26) as 1 | 2 | 4,
  };
  const count = buf.readUInt32LE(28);
  const entries = new Map<string, Tensor>();
  let off = 32;
  for (let e = 0; e < count; e++) {
    const nameLen = buf.readUInt16LE(off);
    off += 2;
    const name = buf.toString("utf-8", off, off + nameLen);
    off += nameLen;
    const shape: Shape = [0, 0, 0, 0];
    for (let i = 0; i < 4; i++) {
      shape[i] = buf.readUInt32LE(off);
      off += 4;
    }
    const size = shape[0] * shape[1] * shape[2] * shape[3];
    const data = new Float64Array(size);
    for (let i = 0; i < size; i++) data[i] = buf.readFloatLE(off + 4 * i);
    off += 4 * size;
    entries.set(name, new Tensor(shape, data));
  }
  if (off !== buf.length) throw new Error(`${path}: ${buf.length - off} trailing bytes`);
  return { config, entries };
}

/** Load an EVRW file into a freshly built model; every entry must match. */
export function loadModel(path: string): Model {
  const { config, entries } = readWeights(path);
  const model = new Model(config);
  for (const p of model.params.values()) {
    const t = entries.get(p.name);
    if (!t) throw new Error(`${path}: missing entry ${p.name}`);
    if (t.size !== p.size) {
      throw new Error(`${path}: entry ${p.name} has ${t.size} values, expected ${p.size}`);
    }
    p.v.t.data.set(t.data);
    entries.delete(p.name);
  }
  if (entries.size > 0) {
    throw new Error(`${path}: unexpected entries ${[...entries.keys()].slice(0, 5).join(", ")}`);
  }
  return model;
}

export function writeTensor(path: string, t: Tensor): void {
  const buf = Buffer.alloc(4 + 4 + 16 + 4 * t.size);
  buf.write(EVRT_MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  for (let i = 0; i < 4; i++) buf.writeUInt32LE(t.shape[i], 8 + 4 * i);
  for (let i = 0; i < t.size; i++) buf.writeFloatLE(Math.fround(t.data[i]), 24 + 4 * i);
  fs.writeFileSync(path, buf);
}

export function readTensor(path: string): Tensor {
  const buf = fs.readFileSync(path);
  if (buf.length < 24 || buf.toString("ascii", 0, 4) !== EVRT_MAGIC) {
    throw new Error(`${path}: not an EVRT file`);
  }
  const shape: Shape = [
    buf.readUInt32LE(8),
    buf.readUInt32LE(12),
    buf.readUInt32LE(16),
    buf.readUInt32LE(20),
  ];
  const size = shape[0] * shape[1] * shape[2] * shape[3];
  if (buf.length !== 24 + 4 * size) throw new Error(`${path}: truncated payload`);
  const data = new Float64Array(size);
  for (let i = 0; i < size; i++) data[i] = buf.readFloatLE(24 + 4 * i);
  return new Tensor(shape, data);
}
