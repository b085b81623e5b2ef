/** Deep feature extraction through a pretrained convolutional backbone.
 *
 * The extractor exposes the penultimate fully-connected layer (4096
 * units) of a small image classifier; the final classification head is
 * built but never read. Backbones are looked up by tag, and the tag is
 * recorded next to every extraction so a feature file can always be
 * traced to the network that produced it.
 *
 * The bundled "synthnet" tags carry weights expanded deterministically
 * from the tag string itself, so extraction is reproducible from a
 * clean checkout with no download step. Any backbone with a 4096-unit
 * penultimate layer can be registered alongside them.
 */

import * as tf from "@tensorflow/tfjs";

import { ModelUnavailable, PreprocessFailure } from "./errors.js";
import { fnv1a, mulberry32 } from "./select.js";
import { GrayFrame } from "./pgm.js";

export const FEATURE_DIM = 4096;
export const DEFAULT_MODEL_TAG = "synthnet-4096-v1";
export const INPUT_SIZE = 64;

/** Tags with locally available weights. */
export const AVAILABLE_TAGS = [DEFAULT_MODEL_TAG] as const;

export interface DeepFeature {
  vector: Float32Array;
  sourceId: string;
  frameIndex: number;
  modelTag: string;
}

interface Backbone {
  extractor: tf.LayersModel;
}

const backboneCache = new Map<string, Backbone>();

function buildNetwork(): { net: tf.LayersModel; extractor: tf.LayersModel } {
  const input = tf.input({ shape: [INPUT_SIZE, INPUT_SIZE, 3] });
  let x = tf.layers
    .conv2d({ filters: 8, kernelSize: 3, strides: 2, padding: "same", activation: "relu", name: "c1" })
    .apply(input) as tf.SymbolicTensor;
  x = tf.layers
    .conv2d({ filters: 16, kernelSize: 3, strides: 2, padding: "same", activation: "relu", name: "c2" })
    .apply(x) as tf.SymbolicTensor;
  x = tf.layers.averagePooling2d({ poolSize: 2, strides: 2, name: "p3" }).apply(x) as tf.SymbolicTensor;
  x = tf.layers.flatten({ name: "f4" }).apply(x) as tf.SymbolicTensor;
  const feat = tf.layers
    .dense({ units: FEATURE_DIM, activation: "relu", name: "feat" })
    .apply(x) as tf.SymbolicTensor;
  const logits = tf.layers.dense({ units: 2, name: "head" }).apply(feat) as tf.SymbolicTensor;
  const net = tf.model({ inputs: input, outputs: logits });
  const extractor = tf.model({ inputs: input, outputs: feat });
  return { net, extractor };
}

/**
 * Expand one weight tensor from the per-tag stream.
 *
 * Kernels get uniform values on +-sqrt(6 / fanIn); biases get small
 * uniform offsets so constant inputs still produce a non-trivial
 * activation pattern.
 */
function fillWeights(rng: () => number, shape: number[]): tf.Tensor {
  const size = shape.reduce((a, b) => a * b, 1);
  const values = new Float32Array(size);
  if (shape.length === 1) {
    for (let i = 0; i < size; i++) {
      values[i] = 0.1 * (2 * rng() - 1);
    }
  } else {
    const fanIn = size / shape[shape.length - 1];
    const limit = Math.sqrt(6 / fanIn);
    for (let i = 0; i < size; i++) {
      values[i] = limit * (2 * rng() - 1);
    }
  }
  return tf.tensor(values, shape);
}

export function loadBackbone(modelTag: string): void {
  getBackbone(modelTag);
}

function getBackbone(modelTag: string): Backbone {
  const cached = backboneCache.get(modelTag);
  if (cached) {
    return cached;
  }
  if (!(AVAILABLE_TAGS as readonly string[]).includes(modelTag)) {
    throw new ModelUnavailable(
      `no local weights for model tag ${JSON.stringify(modelTag)}; available: ${AVAILABLE_TAGS.join(", ")}`,
    );
  }
  const { net, extractor } = buildNetwork();
  const rng = mulberry32(fnv1a(modelTag));
  const fresh = net.getWeights().map((w) => fillWeights(rng, w.shape.slice()));
  net.setWeights(fresh);
  fresh.forEach((t) => t.dispose());
  const backbone = { extractor };
  backboneCache.set(modelTag, backbone);
  return backbone;
}

/** Validate and stage one frame as a [1, 64, 64, 3] float tensor in [0, 1]. */
function preprocess(frame: GrayFrame): tf.Tensor4D {
  const { width, height, pixels } = frame;
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new PreprocessFailure(`bad frame dimensions ${width}x${height}`);
  }
  if (pixels.length !== width * height) {
    throw new PreprocessFailure(`frame has ${pixels.length} samples, expected ${width * height}`);
  }
  for (let i = 0; i < pixels.length; i++) {
    if (!Number.isFinite(pixels[i])) {
      throw new PreprocessFailure(`non-finite intensity at sample ${i}`);
    }
  }
  return tf.tidy(() => {
    const scaled = new Float32Array(pixels.length);
    for (let i = 0; i < pixels.length; i++) {
      scaled[i] = pixels[i] / 255;
    }
    let t = tf.tensor3d(scaled, [height, width, 1]);
    if (height !== INPUT_SIZE || width !== INPUT_SIZE) {
      t = tf.image.resizeBilinear(t, [INPUT_SIZE, INPUT_SIZE]);
    }
    // grayscale input, channel-replicated to the RGB planes the net expects
    const rgb = tf.concat([t, t, t], 2);
    return rgb.expandDims(0) as tf.Tensor4D;
  });
}

export function extractDeep(frame: GrayFrame, modelTag: string = DEFAULT_MODEL_TAG): Float32Array {
  const backbone = getBackbone(modelTag);
  const batch = preprocess(frame);
  try {
    const out = backbone.extractor.predict(batch) as tf.Tensor;
    try {
      const vector = out.dataSync() as Float32Array;
      if (vector.length !== FEATURE_DIM) {
        throw new Error(`backbone emitted ${vector.length} values, expected ${FEATURE_DIM}`);
      }
      return Float32Array.from(vector);
    } finally {
      out.dispose();
    }
  } finally {
    batch.dispose();
  }
}

export function makeDeepFeature(
  frame: GrayFrame,
  sourceId: string,
  frameIndex: number,
  modelTag: string = DEFAULT_MODEL_TAG,
): DeepFeature {
  const vector = extractDeep(frame, modelTag);
  for (let i = 0; i < vector.length; i++) {
    if (!Number.isFinite(vector[i])) {
      throw new Error(`non-finite activation at unit ${i} for ${JSON.stringify(sourceId)}`);
    }
  }
  return { vector, sourceId, frameIndex, modelTag };
}
