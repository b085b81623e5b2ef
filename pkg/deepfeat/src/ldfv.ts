/** Feature interchange files, shared with the pipeline package.
 *
 * Layout:
 *
 *     header line, ASCII:  LDFV1 <kind> <dim> <count>\n
 *     per record:          <source_id>\n  followed by <dim> IEEE-754
 *                          single-precision little-endian values
 *
 * Writer and reader are bit-exact: whatever float32 payload goes in
 * comes back unchanged. Byte order is pinned to little-endian through
 * DataView, never the platform's native order.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import { MalformedFile } from "./errors.js";

export const FEATURE_KINDS = ["dk", "deep"] as const;
export type FeatureKind = (typeof FEATURE_KINDS)[number];

const MAGIC = "LDFV1";

export type FeatureRecord = [sourceId: string, vector: Float32Array];

export function encodeFeatures(kind: string, records: ReadonlyArray<readonly [string, ArrayLike<number>]>): Uint8Array {
  if (!(FEATURE_KINDS as readonly string[]).includes(kind)) {
    throw new Error(`kind must be one of ${FEATURE_KINDS.join(", ")}, got ${JSON.stringify(kind)}`);
  }
  if (records.length === 0) {
    throw new Error("feature file must contain at least one record");
  }
  const dim = records[0][1].length;
  const encoder = new TextEncoder();
  const chunks: Uint8Array[] = [encoder.encode(`${MAGIC} ${kind} ${dim} ${records.length}\n`)];
  for (const [sourceId, vector] of records) {
    if (!sourceId || sourceId.includes("\n") || sourceId.includes("\r")) {
      throw new Error(`invalid source_id ${JSON.stringify(sourceId)}`);
    }
    if (vector.length !== dim) {
      throw new Error(`record ${JSON.stringify(sourceId)} has ${vector.length} values, expected ${dim}`);
    }
    const payload = new Uint8Array(4 * dim);
    const view = new DataView(payload.buffer);
    for (let i = 0; i < dim; i++) {
      const v = Math.fround(vector[i]);
      if (!Number.isFinite(v)) {
        throw new Error(`record ${JSON.stringify(sourceId)} contains non-finite values`);
      }
      view.setFloat32(4 * i, v, true);
    }
    chunks.push(encoder.encode(sourceId + "\n"));
    chunks.push(payload);
  }
  return concatBytes(chunks);
}

export function decodeFeatures(data: Uint8Array): { kind: FeatureKind; dim: number; records: FeatureRecord[] } {
  const headerEnd = data.indexOf(0x0a);
  if (headerEnd === -1) {
    throw new MalformedFile("missing feature file header line");
  }
  const header = new TextDecoder("utf-8", { fatal: false }).decode(data.subarray(0, headerEnd));
  const parts = header.split(" ");
  if (parts.length !== 4 || parts[0] !== MAGIC) {
    throw new MalformedFile(`bad feature file header ${JSON.stringify(header)}`);
  }
  const kind = parts[1];
  if (!(FEATURE_KINDS as readonly string[]).includes(kind)) {
    throw new MalformedFile(`unknown feature kind ${JSON.stringify(kind)}`);
  }
  const dim = headerInt(parts[2], header);
  const count = headerInt(parts[3], header);
  if (dim < 1 || count < 1) {
    throw new MalformedFile(`bad feature file header ${JSON.stringify(header)}`);
  }

  const records: FeatureRecord[] = [];
  let pos = headerEnd + 1;
  const payload = 4 * dim;
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  for (let r = 0; r < count; r++) {
    const idEnd = data.indexOf(0x0a, pos);
    if (idEnd === -1) {
      throw new MalformedFile("truncated feature file: missing source_id line");
    }
    const sourceId = new TextDecoder().decode(data.subarray(pos, idEnd));
    pos = idEnd + 1;
    if (data.length - pos < payload) {
      throw new MalformedFile(`truncated feature record ${JSON.stringify(sourceId)}`);
    }
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = view.getFloat32(pos + 4 * i, true);
    }
    records.push([sourceId, vector]);
    pos += payload;
  }
  if (pos !== data.length) {
    throw new MalformedFile(`${data.length - pos} trailing bytes after last record`);
  }
  return { kind: kind as FeatureKind, dim, records };
}

export function writeFeatures(
  filePath: string,
  kind: string,
  records: ReadonlyArray<readonly [string, ArrayLike<number>]>,
): void {
  atomicWriteBytes(filePath, encodeFeatures(kind, records));
}

export function readFeatures(filePath: string): { kind: FeatureKind; dim: number; records: FeatureRecord[] } {
  return decodeFeatures(fs.readFileSync(filePath));
}

export function atomicWriteBytes(filePath: string, data: Uint8Array): void {
  const dir = path.dirname(path.resolve(filePath));
  const tmp = path.join(dir, `.tmp-${crypto.randomBytes(8).toString("hex")}~`);
  try {
    fs.writeFileSync(tmp, data);
    fs.renameSync(tmp, filePath);
  } catch (err) {
    if (fs.existsSync(tmp)) {
      fs.unlinkSync(tmp);
    }
    throw err;
  }
}

/** Serialize a structured document deterministically (sorted keys). */
export function writeJsonDoc(filePath: string, doc: Record<string, unknown>): void {
  const text = stableJson(doc, "") + "\n";
  atomicWriteBytes(filePath, new TextEncoder().encode(text));
}

function stableJson(value: unknown, indent: string): string {
  if (Array.isArray(value)) {
    if (value.length === 0) {
      return "[]";
    }
    const inner = indent + " ";
    const items = value.map((v) => inner + stableJson(v, inner));
    return "[\n" + items.join(",\n") + "\n" + indent + "]";
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
    if (entries.length === 0) {
      return "{}";
    }
    const inner = indent + " ";
    const items = entries.map(([k, v]) => `${inner}${JSON.stringify(k)}: ${stableJson(v, inner)}`);
    return "{\n" + items.join(",\n") + "\n" + indent + "}";
  }
  return JSON.stringify(value);
}

function headerInt(field: string, header: string): number {
  if (!/^\d+$/.test(field)) {
    throw new MalformedFile(`bad feature file header ${JSON.stringify(header)}`);
  }
  return parseInt(field, 10);
}

function concatBytes(chunks: Uint8Array[]): Uint8Array {
  let total = 0;
  for (const c of chunks) {
    total += c.length;
  }
  const out = new Uint8Array(total);
  let pos = 0;
  for (const c of chunks) {
    out.set(c, pos);
    pos += c.length;
  }
  return out;
}
