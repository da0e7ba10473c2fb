/**
 * Reader for motionforge shard trees.
 *
 * Record layout (little-endian): magic "SMLS" | u16 version | u32 header
 * length | header JSON | unmasked blocks f32 | masked indices u32 | targets
 * f32 | u64 xxh64 checksum over all preceding record bytes. Typed-array
 * fields are zero-copy views into the shard buffer whenever their byte
 * offset is aligned; otherwise the bytes are copied and `zeroCopy` is false.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { xxh64 } from "./xxhash64.js";

const MAGIC = 0x534c4d53; // "SMLS" read as little-endian u32
const RECORD_VERSION = 1;
const MANIFEST_VERSION = 1;

export interface Geometry {
  frameCount: number;
  height: number;
  width: number;
  temporalPatch: number;
  spatialPatch: number;
}

export interface SampleRecord {
  sampleId: string;
  variant: string;
  geometry: Geometry;
  targetDim: number;
  maskedCount: number;
  unmaskedCount: number;
  /** (unmaskedCount, p_t, p_s, p_s, 3) flattened */
  unmaskedBlocks: Float32Array;
  /** ascending flat token indices */
  maskedIndices: Uint32Array;
  /** (maskedCount, targetDim) flattened */
  targets: Float32Array;
  /** one char per masked index: 't' trajectory, 'b' tube */
  provenance: string;
  header: Record<string, unknown>;
  /** raw bytes of the whole record, including the checksum */
  bytes: Uint8Array;
  zeroCopy: boolean;
}

export interface ShardInfo {
  file: string;
  records: number;
  offsets: number[];
  bytes: number;
}

export interface Manifest {
  format_version: number;
  config_hash: string;
  token_order: string;
  sample_count: number;
  shards: ShardInfo[];
  [extra: string]: unknown;
}

export class ShardIntegrityError extends Error {}

export function readManifest(manifestPath: string): Manifest {
  const raw = JSON.parse(readFileSync(manifestPath, "utf-8")) as Manifest;
  if (raw.format_version !== MANIFEST_VERSION) {
    throw new ShardIntegrityError(`unsupported manifest version ${raw.format_version}`);
  }
  return raw;
}

function viewF32(buf: Uint8Array, byteOffset: number, count: number): { array: Float32Array; zeroCopy: boolean } {
  const absolute = buf.byteOffset + byteOffset;
  if (absolute % 4 === 0) {
    return { array: new Float32Array(buf.buffer, absolute, count), zeroCopy: true };
  }
  const copy = buf.slice(byteOffset, byteOffset + count * 4);
  return { array: new Float32Array(copy.buffer, 0, count), zeroCopy: false };
}

function viewU32(buf: Uint8Array, byteOffset: number, count: number): { array: Uint32Array; zeroCopy: boolean } {
  const absolute = buf.byteOffset + byteOffset;
  if (absolute % 4 === 0) {
    return { array: new Uint32Array(buf.buffer, absolute, count), zeroCopy: true };
  }
  const copy = buf.slice(byteOffset, byteOffset + count * 4);
  return { array: new Uint32Array(copy.buffer, 0, count), zeroCopy: false };
}

export function parseRecord(
  buf: Uint8Array,
  offset = 0,
  recordIndex = 0,
): { record: SampleRecord; next: number } {
  const fail = (why: string): never => {
    throw new ShardIntegrityError(`record ${recordIndex}: ${why}`);
  };
  if (buf.length < offset + 10) fail("truncated before header");
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  if (view.getUint32(offset, true) !== MAGIC) fail("bad magic");
  const version = view.getUint16(offset + 4, true);
  if (version !== RECORD_VERSION) fail(`unsupported record version ${version}`);
  const headerLen = view.getUint32(offset + 6, true);
  const headerStart = offset + 10;
  const headerEnd = headerStart + headerLen;
  if (buf.length < headerEnd) fail("truncated inside header");

  let header: Record<string, unknown>;
  let geometry: Geometry;
  let counts: { unmasked: number; masked: number };
  let targetDim: number;
  try {
    header = JSON.parse(new TextDecoder().decode(buf.subarray(headerStart, headerEnd)));
    const g = header.geometry as Record<string, number>;
    geometry = {
      frameCount: g.frame_count,
      height: g.height,
      width: g.width,
      temporalPatch: g.temporal_patch,
      spatialPatch: g.spatial_patch,
    };
    counts = header.counts as { unmasked: number; masked: number };
    targetDim = header.target_dim as number;
    if (!Number.isInteger(counts.unmasked) || !Number.isInteger(counts.masked)) {
      throw new Error("bad counts");
    }
  } catch (err) {
    return fail(`corrupt header (${err})`);
  }

  const blockFloats =
    counts.unmasked * geometry.temporalPatch * geometry.spatialPatch * geometry.spatialPatch * 3;
  const blocksBytes = blockFloats * 4;
  const maskedBytes = counts.masked * 4;
  const targetBytes = counts.masked * targetDim * 4;
  const payloadEnd = headerEnd + blocksBytes + maskedBytes + targetBytes;
  if (buf.length < payloadEnd + 8) fail("truncated payload");

  const stored = view.getBigUint64(payloadEnd, true);
  const computed = xxh64(buf.subarray(offset, payloadEnd));
  if (stored !== computed) {
    fail(`checksum mismatch (stored 0x${stored.toString(16)}, computed 0x${computed.toString(16)})`);
  }

  const blocks = viewF32(buf, headerEnd, blockFloats);
  const masked = viewU32(buf, headerEnd + blocksBytes, counts.masked);
  const targets = viewF32(buf, headerEnd + blocksBytes + maskedBytes, counts.masked * targetDim);

  const record: SampleRecord = {
    sampleId: header.sample_id as string,
    variant: header.variant as string,
    geometry,
    targetDim,
    maskedCount: counts.masked,
    unmaskedCount: counts.unmasked,
    unmaskedBlocks: blocks.array,
    maskedIndices: masked.array,
    targets: targets.array,
    provenance: header.provenance as string,
    header,
    bytes: buf.subarray(offset, payloadEnd + 8),
    zeroCopy: blocks.zeroCopy && masked.zeroCopy && targets.zeroCopy,
  };
  return { record, next: payloadEnd + 8 };
}

export function parseRecordFile(path: string): SampleRecord {
  const buf = readFileSync(path);
  const { record, next } = parseRecord(new Uint8Array(buf.buffer, buf.byteOffset, buf.byteLength));
  if (next !== buf.length) {
    throw new ShardIntegrityError(`${path}: ${buf.length - next} trailing bytes`);
  }
  return record;
}

/** Read every record of a shard tree, checksum-verified, in manifest order. */
export function readShards(manifestPath: string): SampleRecord[] {
  const manifest = readManifest(manifestPath);
  const base = dirname(manifestPath);
  const records: SampleRecord[] = [];
  let index = 0;
  for (const shard of manifest.shards) {
    const raw = readFileSync(join(base, shard.file));
    const buf = new Uint8Array(raw.buffer, raw.byteOffset, raw.byteLength);
    let offset = 0;
    for (let i = 0; i < shard.records; i++) {
      const { record, next } = parseRecord(buf, offset, index);
      records.push(record);
      offset = next;
      index += 1;
    }
    if (offset !== buf.length) {
      throw new ShardIntegrityError(`${shard.file}: ${buf.length - offset} trailing bytes`);
    }
  }
  if (records.length !== manifest.sample_count) {
    throw new ShardIntegrityError(
      `manifest declares ${manifest.sample_count} samples, shards hold ${records.length}`,
    );
  }
  return records;
}
