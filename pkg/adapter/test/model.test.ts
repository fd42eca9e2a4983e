import assert from "node:assert/strict";
import { test } from "node:test";
import * as path from "node:path";
import { boxBlur, forwardPass, SplitMix64 } from "../src/model";
import { NpyArray } from "../src/npy";

const TOY_MODEL = path.join(__dirname, "..", "..", "toy-model.json");

function image(shape: number[], fill: (i: number) => number): NpyArray {
  const count = shape.reduce((a, b) => a * b, 1);
  return { shape, dtype: "<f4", data: new Float32Array(Array.from({ length: count }, (_, i) => fill(i))) };
}

const mock = { model_path: "mock", dropout_enabled: false, class_count: 2 };

test("mock mode thresholds at 0.5 exactly", () => {
  const img = image([2, 3], (i) => [0.0, 0.5, 0.5000001, 1.0, -2.0, 0.49][i]);
  const labels = forwardPass(img, mock, 123);
  assert.deepEqual(Array.from(labels), [0, 0, 1, 1, 0, 0]);
});

test("mock mode ignores the seed", () => {
  const img = image([4, 4], (i) => Math.sin(i));
  assert.deepEqual(forwardPass(img, mock, 1), forwardPass(img, mock, 999));
});

test("splitmix64 is deterministic per seed", () => {
  const a = new SplitMix64(42);
  const b = new SplitMix64(42);
  const c = new SplitMix64(43);
  const seqA = [a.nextDouble(), a.nextDouble(), a.nextDouble()];
  const seqB = [b.nextDouble(), b.nextDouble(), b.nextDouble()];
  assert.deepEqual(seqA, seqB);
  assert.notDeepEqual(seqA, [c.nextDouble(), c.nextDouble(), c.nextDouble()]);
  for (const v of seqA) assert.ok(v >= 0 && v < 1);
});

test("box blur averages the clamped 3x3 neighborhood", () => {
  // single bright pixel in a corner: its own cell averages (4 copies of the
  // corner + 5 zeros... with edge replication the corner contributes 4 times)
  const img = image([3, 3], (i) => (i === 0 ? 9 : 0));
  const blurred = boxBlur(img.data as Float32Array, [3, 3]);
  assert.equal(blurred[0], 4);  // corner: replicated into 4 of 9 taps
  assert.equal(blurred[4], 1);  // center: 1 of 9 taps
  assert.equal(blurred[8], 0);
});

test("dropout pass is a pure function of (input, seed)", () => {
  const config = { model_path: TOY_MODEL, dropout_enabled: true, class_count: 2 };
  const img = image([8, 8], (i) => ((i % 8) + Math.floor(i / 8)) / 14);
  const a = forwardPass(img, config, 7);
  const b = forwardPass(img, config, 7);
  assert.deepEqual(Array.from(a), Array.from(b));
});

test("dropout varies across seeds on a boundary-heavy input", () => {
  const config = { model_path: TOY_MODEL, dropout_enabled: true, class_count: 2 };
  const img = image([8, 8], (i) => ((i % 8) + Math.floor(i / 8)) / 14);
  const outputs = [0, 1, 2, 3, 4].map((seed) => Array.from(forwardPass(img, config, seed)).join(""));
  assert.ok(new Set(outputs).size > 1, "expected at least two distinct outputs across 5 seeds");
});

test("toy model without dropout combines both features", () => {
  const config = { model_path: TOY_MODEL, dropout_enabled: false, class_count: 2 };
  const img = image([4, 4], (i) => (i >= 8 ? 1 : 0));
  const labels = forwardPass(img, config, 0);
  // 0.7 * x + 0.3 * blur > 0.5: solidly-foreground rows stay on, top rows off
  assert.deepEqual(Array.from(labels.subarray(0, 4)), [0, 0, 0, 0]);
  assert.deepEqual(Array.from(labels.subarray(12, 16)), [1, 1, 1, 1]);
});

test("rejects uint8 input", () => {
  const bad: NpyArray = { shape: [2, 2], dtype: "|u1", data: new Uint8Array(4) };
  assert.throws(() => forwardPass(bad, mock, 0), /float32/);
});
