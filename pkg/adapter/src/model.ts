/**
 * The predictor itself: a mock thresholder and a tiny two-feature linear
 * model with optional dropout at inference time.
 *
 * Mock mode reproduces `image > 0.5` exactly. Model mode computes
 * w0 * image + w1 * boxblur3(image) + bias and thresholds it; with dropout
 * enabled each feature is kept with probability 0.5 (kept features scaled
 * by 2), the keep mask drawn from a PRNG seeded solely by the --seed flag,
 * so one invocation is one stochastic forward pass and a pure function of
 * (input, seed).
 */

import * as fs from "fs";
import { NpyArray } from "./npy";

export interface AdapterConfig {
  model_path: string; // "mock" or a JSON weights file
  dropout_enabled: boolean;
  class_count: number;
}

export interface ToyModel {
  weights: [number, number];
  bias: number;
  threshold: number;
}

export const MOCK_THRESHOLD = 0.5;

export function loadConfig(path: string): AdapterConfig {
  const doc = JSON.parse(fs.readFileSync(path, "utf8"));
  const config: AdapterConfig = {
    model_path: doc.model_path ?? "mock",
    dropout_enabled: Boolean(doc.dropout_enabled),
    class_count: doc.class_count ?? 2,
  };
  if (!Number.isInteger(config.class_count) || config.class_count < 2) {
    throw new Error(`class_count must be an integer >= 2, got ${doc.class_count}`);
  }
  return config;
}

export function loadModel(path: string): ToyModel {
  const doc = JSON.parse(fs.readFileSync(path, "utf8"));
  if (!Array.isArray(doc.weights) || doc.weights.length !== 2) {
    throw new Error("model file must provide two feature weights");
  }
  return {
    weights: [Number(doc.weights[0]), Number(doc.weights[1])],
    bias: Number(doc.bias ?? 0),
    threshold: Number(doc.threshold ?? MOCK_THRESHOLD),
  };
}

/** splitmix64, the seed fully determines the stream. */
export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt.asUintN(64, BigInt(seed));
  }

  nextUint64(): bigint {
    this.state = BigInt.asUintN(64, this.state + 0x9e3779b97f4a7c15n);
    let z = this.state;
    z = BigInt.asUintN(64, (z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n);
    z = BigInt.asUintN(64, (z ^ (z >> 27n)) * 0x94d049bb133111ebn);
    return z ^ (z >> 31n);
  }

  /** uniform double in [0, 1) from the top 53 bits */
  nextDouble(): number {
    return Number(this.nextUint64() >> 11n) / 9007199254740992;
  }
}

/** 3^d box mean with edge replication, C-order input. */
export function boxBlur(values: Float32Array, shape: number[]): Float64Array {
  const out = new Float64Array(values.length);
  const strides = shape.map((_, k) => shape.slice(k + 1).reduce((a, b) => a * b, 1));
  const idx = new Array(shape.length).fill(0);
  const offsets = shape.length === 2 ? offsets2d : offsets3d;
  for (let flat = 0; flat < values.length; flat++) {
    let total = 0;
    for (const off of offsets) {
      let at = 0;
      for (let k = 0; k < shape.length; k++) {
        let v = idx[k] + off[k];
        if (v < 0) v = 0;
        if (v >= shape[k]) v = shape[k] - 1;
        at += v * strides[k];
      }
      total += values[at];
    }
    out[flat] = total / offsets.length;
    // advance the multi-index, last axis fastest
    for (let k = shape.length - 1; k >= 0; k--) {
      idx[k]++;
      if (idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

const offsets2d: number[][] = [];
for (let a = -1; a <= 1; a++) for (let b = -1; b <= 1; b++) offsets2d.push([a, b]);
const offsets3d: number[][] = [];
for (let a = -1; a <= 1; a++)
  for (let b = -1; b <= 1; b++) for (let c = -1; c <= 1; c++) offsets3d.push([a, b, c]);

export function forwardPass(input: NpyArray, config: AdapterConfig, seed: number): Uint8Array {
  if (input.dtype !== "<f4") {
    throw new Error(`input must be float32, got ${input.dtype}`);
  }
  const values = input.data as Float32Array;
  const labels = new Uint8Array(values.length);

  if (config.model_path === "mock" && !config.dropout_enabled) {
    for (let i = 0; i < values.length; i++) {
      labels[i] = values[i] > MOCK_THRESHOLD ? 1 : 0;
    }
    return labels;
  }

  const model: ToyModel =
    config.model_path === "mock"
      ? { weights: [1, 0], bias: 0, threshold: MOCK_THRESHOLD }
      : loadModel(config.model_path);

  let gains: [number, number] = [model.weights[0], model.weights[1]];
  if (config.dropout_enabled) {
    // inverted dropout with keep probability 0.5 on each feature
    const rng = new SplitMix64(seed);
    const keep0 = rng.nextDouble() < 0.5;
    const keep1 = rng.nextDouble() < 0.5;
    gains = [keep0 ? 2 * model.weights[0] : 0, keep1 ? 2 * model.weights[1] : 0];
  }

  const blurred = gains[1] !== 0 ? boxBlur(values, input.shape) : null;
  for (let i = 0; i < values.length; i++) {
    const logit = gains[0] * values[i] + (blurred ? gains[1] * blurred[i] : 0) + model.bias;
    labels[i] = logit > model.threshold ? 1 : 0;
  }
  return labels;
}
