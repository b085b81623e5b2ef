export {
  DuplicateId,
  MalformedFile,
  MissingFile,
  ModelUnavailable,
  ParseError,
  PreprocessFailure,
  UnsupportedFormat,
  UsageError,
} from "./errors.js";
export { decodePgm, GrayFrame } from "./pgm.js";
export { LABELS, loadManifest, Manifest, ManifestEntry, Split, splitEntries, SPLITS } from "./manifest.js";
export { fnv1a, mulberry32, selectFrame } from "./select.js";
export {
  atomicWriteBytes,
  decodeFeatures,
  encodeFeatures,
  FEATURE_KINDS,
  FeatureKind,
  FeatureRecord,
  readFeatures,
  writeFeatures,
  writeJsonDoc,
} from "./ldfv.js";
export {
  AVAILABLE_TAGS,
  DEFAULT_MODEL_TAG,
  DeepFeature,
  extractDeep,
  FEATURE_DIM,
  INPUT_SIZE,
  loadBackbone,
  makeDeepFeature,
} from "./model.js";
export { main } from "./cli.js";
