/**
 * Minimal NPY v1.0 reader/writer for the file-handoff protocol.
 *
 * Supported subset: little-endian float32 ('<f4') and uint8 ('|u1'),
 * C order, 2 or 3 dimensions. Headers are padded to a 64-byte boundary,
 * matching the toolkit's writer byte for byte.
 */

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export interface NpyArray {
  shape: number[];
  dtype: "<f4" | "|u1";
  data: Float32Array | Uint8Array;
}

export class NpyFormatError extends Error {
  constructor(public field: string, message: string) {
    super(`${field}: ${message}`);
  }
}

export function parseNpy(raw: Buffer): NpyArray {
  if (raw.length < 10 || !raw.subarray(0, 6).equals(MAGIC)) {
    throw new NpyFormatError("magic", "not an NPY file");
  }
  if (raw[6] !== 1 || raw[7] !== 0) {
    throw new NpyFormatError("version", `unsupported NPY version ${raw[6]}.${raw[7]}, expected 1.0`);
  }
  const headerLen = raw.readUInt16LE(8);
  const headerEnd = 10 + headerLen;
  if (raw.length < headerEnd) {
    throw new NpyFormatError("header", "file truncated inside header");
  }
  const header = raw.subarray(10, headerEnd).toString("latin1");

  const descrMatch = header.match(/'descr'\s*:\s*'([^']*)'/);
  if (!descrMatch || (descrMatch[1] !== "<f4" && descrMatch[1] !== "|u1")) {
    throw new NpyFormatError("descr", `unsupported dtype ${descrMatch ? descrMatch[1] : "?"}`);
  }
  const dtype = descrMatch[1] as "<f4" | "|u1";

  const fortranMatch = header.match(/'fortran_order'\s*:\s*(True|False)/);
  if (!fortranMatch) {
    throw new NpyFormatError("fortran_order", "missing flag");
  }
  if (fortranMatch[1] === "True") {
    throw new NpyFormatError("fortran_order", "Fortran-order arrays are not supported");
  }

  const shapeMatch = header.match(/'shape'\s*:\s*\(([^)]*)\)/);
  if (!shapeMatch) {
    throw new NpyFormatError("shape", "missing shape tuple");
  }
  const shape = shapeMatch[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => Number(s));
  if (shape.length < 2 || shape.length > 3 || shape.some((n) => !Number.isInteger(n) || n <= 0)) {
    throw new NpyFormatError("shape", `expected 2 or 3 positive dims, got (${shapeMatch[1]})`);
  }

  const count = shape.reduce((a, b) => a * b, 1);
  const itemsize = dtype === "<f4" ? 4 : 1;
  const payload = raw.subarray(headerEnd);
  if (payload.length !== count * itemsize) {
    throw new NpyFormatError("data", `payload is ${payload.length} bytes, expected ${count * itemsize}`);
  }
  // copy so the typed array is aligned and independent of the file buffer
  const bytes = Buffer.from(payload);
  const data =
    dtype === "<f4"
      ? new Float32Array(bytes.buffer, bytes.byteOffset, count)
      : new Uint8Array(bytes.buffer, bytes.byteOffset, count);
  return { shape, dtype, data };
}

export function serializeNpy(arr: NpyArray): Buffer {
  const shapeText = arr.shape.length === 1 ? `(${arr.shape[0]},)` : `(${arr.shape.join(", ")})`;
  let header = `{'descr': '${arr.dtype}', 'fortran_order': False, 'shape': ${shapeText}, }`;
  const unpadded = MAGIC.length + 2 + 2 + header.length + 1;
  header = header + " ".repeat((64 - (unpadded % 64)) % 64) + "\n";
  const head = Buffer.alloc(10);
  MAGIC.copy(head, 0);
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  const payload = Buffer.from(arr.data.buffer, arr.data.byteOffset, arr.data.byteLength);
  return Buffer.concat([head, Buffer.from(header, "latin1"), payload]);
}
