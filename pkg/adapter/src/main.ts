/**
 * Entry point for the subprocess protocol:
 *
 *   node dist/src/main.js --input in.npy --output out.npy --seed 7 [--config cfg.json]
 *
 * Reads a float32 NPY image, runs one (optionally stochastic) forward pass
 * determined entirely by the seed, and writes uint8 NPY labels of the same
 * spatial shape. Exit code 0 on success; any failure prints a one-line
 * message to stderr and exits nonzero.
 */

import * as fs from "fs";
import { loadConfig, forwardPass, AdapterConfig } from "./model";
import { parseNpy, serializeNpy } from "./npy";

function parseArgs(argv: string[]): { input: string; output: string; seed: number; config?: string } {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near ${key}`);
    }
    out[key.slice(2)] = value;
  }
  for (const required of ["input", "output", "seed"]) {
    if (!(required in out)) {
      throw new Error(`missing required flag --${required}`);
    }
  }
  const seed = Number(out.seed);
  if (!Number.isFinite(seed) || !Number.isInteger(seed)) {
    throw new Error(`--seed must be an integer, got ${out.seed}`);
  }
  return { input: out.input, output: out.output, seed, config: out.config };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  const config: AdapterConfig = args.config
    ? loadConfig(args.config)
    : { model_path: "mock", dropout_enabled: false, class_count: 2 };
  const input = parseNpy(fs.readFileSync(args.input));
  const labels = forwardPass(input, config, args.seed);
  fs.writeFileSync(args.output, serializeNpy({ shape: input.shape, dtype: "|u1", data: labels }));
  return 0;
}

if (require.main === module) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(`npy-seg-adapter: error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
