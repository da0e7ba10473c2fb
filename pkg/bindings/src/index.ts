export { xxh64 } from "./xxhash64.js";
export {
  readManifest,
  readShards,
  parseRecord,
  parseRecordFile,
  ShardIntegrityError,
  type Geometry,
  type Manifest,
  type SampleRecord,
  type ShardInfo,
} from "./shards.js";
export { featureLoss, pixelLoss } from "./loss.js";
export { buildSample, trajectoryMask, type MaskReport, type SampleCoordinates } from "./cli.js";
