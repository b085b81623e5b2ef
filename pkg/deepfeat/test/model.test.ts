import { describe, expect, it } from "vitest";

import { ModelUnavailable, PreprocessFailure } from "../src/errors.js";
import { DEFAULT_MODEL_TAG, extractDeep, FEATURE_DIM, makeDeepFeature } from "../src/model.js";
import { GrayFrame } from "../src/pgm.js";

function flatFrame(size: number, value: number): GrayFrame {
  return { width: size, height: size, pixels: new Float64Array(size * size).fill(value) };
}

function gradientFrame(width: number, height: number): GrayFrame {
  const pixels = new Float64Array(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      pixels[y * width + x] = (255 * (x + y)) / (width + height - 2);
    }
  }
  return { width, height, pixels };
}

function l2(v: Float32Array): number {
  let acc = 0;
  for (const x of v) {
    acc += x * x;
  }
  return Math.sqrt(acc);
}

describe("extractDeep", () => {
  it("emits a finite vector of length 4096", () => {
    const vector = extractDeep(gradientFrame(64, 64));
    expect(vector.length).toBe(FEATURE_DIM);
    expect(vector.every(Number.isFinite)).toBe(true);
  });

  it("gives the identical vector for the identical frame", () => {
    const frame = gradientFrame(64, 64);
    const a = extractDeep(frame);
    const b = extractDeep(frame);
    expect(a.length).toBe(b.length);
    for (let i = 0; i < a.length; i++) {
      expect(Object.is(a[i], b[i])).toBe(true);
    }
  });

  it("separates all-black from all-white frames", () => {
    const black = extractDeep(flatFrame(64, 0));
    const white = extractDeep(flatFrame(64, 255));
    expect(Math.abs(l2(black) - l2(white))).toBeGreaterThan(0);
  });

  it("resizes frames that are not 64x64", () => {
    const small = extractDeep(gradientFrame(16, 12));
    const large = extractDeep(gradientFrame(100, 80));
    expect(small.length).toBe(FEATURE_DIM);
    expect(large.length).toBe(FEATURE_DIM);
    expect(small.every(Number.isFinite)).toBe(true);
    expect(large.every(Number.isFinite)).toBe(true);
  });

  it("keeps a useful fraction of units active", () => {
    const vector = extractDeep(gradientFrame(64, 64));
    const active = vector.filter((x) => x > 0).length / vector.length;
    expect(active).toBeGreaterThan(0.05);
    expect(active).toBeLessThan(0.95);
  });

  it("rejects unknown model tags", () => {
    expect(() => extractDeep(flatFrame(64, 0), "alexnet-caffe-l7")).toThrow(ModelUnavailable);
  });

  it("rejects malformed frames before inference", () => {
    expect(() => extractDeep({ width: 0, height: 4, pixels: new Float64Array(0) })).toThrow(PreprocessFailure);
    expect(() => extractDeep({ width: 2, height: 2, pixels: new Float64Array(3) })).toThrow(PreprocessFailure);
    const poisoned = flatFrame(8, 1);
    poisoned.pixels[11] = NaN;
    expect(() => extractDeep(poisoned)).toThrow(PreprocessFailure);
  });
});

describe("makeDeepFeature", () => {
  it("carries provenance next to the vector", () => {
    const feature = makeDeepFeature(gradientFrame(64, 64), "live/clip-3", 2);
    expect(feature.sourceId).toBe("live/clip-3");
    expect(feature.frameIndex).toBe(2);
    expect(feature.modelTag).toBe(DEFAULT_MODEL_TAG);
    expect(feature.vector.length).toBe(FEATURE_DIM);
  });
});
