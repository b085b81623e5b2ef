/** Deterministic per-clip frame choice.
 *
 * Each clip gets its own generator keyed on (seed, source_id), so the
 * chosen index depends on nothing but those two values: re-running an
 * extraction reproduces it, and adding clips to a corpus does not
 * reshuffle the picks for existing ones.
 */

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;

/** 32-bit FNV-1a over the UTF-8 bytes of a string. */
export function fnv1a(text: string): number {
  const bytes = new TextEncoder().encode(text);
  let hash = FNV_OFFSET;
  for (const b of bytes) {
    hash ^= b;
    hash = Math.imul(hash, FNV_PRIME);
  }
  return hash >>> 0;
}

/** mulberry32: tiny 32-bit PRNG, uniform on [0, 1). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Pick the frame index to extract for one clip.
 *
 * Newlines cannot occur in a source_id (the feature writer rejects
 * them), which makes "\n" a safe separator between the two key parts.
 */
export function selectFrame(frameCount: number, seed: number, sourceId: string): number {
  if (!Number.isInteger(frameCount) || frameCount < 1) {
    throw new Error(`frameCount must be a positive integer, got ${frameCount}`);
  }
  if (!Number.isInteger(seed)) {
    throw new Error(`seed must be an integer, got ${seed}`);
  }
  const rng = mulberry32(fnv1a(`${seed}\n${sourceId}`));
  return Math.floor(rng() * frameCount);
}
