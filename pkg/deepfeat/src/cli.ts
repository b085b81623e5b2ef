#!/usr/bin/env node
/** Command line front end: batch deep-feature extraction.
 *
 * Exit codes: 0 success, 1 any failure (usage, input, model).
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";

import { UnsupportedFormat, UsageError } from "./errors.js";
import { writeFeatures, writeJsonDoc } from "./ldfv.js";
import { loadManifest, splitEntries, Manifest, ManifestEntry, Split, SPLITS } from "./manifest.js";
import { DEFAULT_MODEL_TAG, FEATURE_DIM, makeDeepFeature } from "./model.js";
import { decodePgm } from "./pgm.js";
import { selectFrame } from "./select.js";

const USAGE = `usage: deepfeat extract --manifest FILE --out FILE [options]

Extract one deep feature vector per clip and write them as an
interchange feature file (kind "deep", ${FEATURE_DIM} values per record).

options:
  --manifest FILE   tab-separated clip index (required)
  --out FILE        output feature file (required)
  --model-tag TAG   backbone identifier (default ${DEFAULT_MODEL_TAG})
  --seed N          frame-selection seed (default 0)
  --split NAME      train, devel, test, or all (default all)
  --raw             accept frames without a diffusion sidecar
  --help            show this message

By default every frame directory must carry the diffusion-config.txt
sidecar the diffusion stage writes, proving the frames were diffused;
--raw lifts that check for ablation runs on raw frames.`;

const SIDECAR = "diffusion-config.txt";

interface ExtractArgs {
  manifest: string;
  out: string;
  modelTag: string;
  seed: number;
  split: Split | "all";
  raw: boolean;
}

function parseExtractArgs(argv: string[]): ExtractArgs {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      manifest: { type: "string" },
      out: { type: "string" },
      "model-tag": { type: "string", default: DEFAULT_MODEL_TAG },
      seed: { type: "string", default: "0" },
      split: { type: "string", default: "all" },
      raw: { type: "boolean", default: false },
      help: { type: "boolean", default: false },
    },
    allowPositionals: true,
  });
  if (values.help) {
    throw new UsageError("help");
  }
  if (positionals.length > 0) {
    throw new UsageError(`unexpected argument ${JSON.stringify(positionals[0])}`);
  }
  if (!values.manifest) {
    throw new UsageError("--manifest is required");
  }
  if (!values.out) {
    throw new UsageError("--out is required");
  }
  const seed = Number(values.seed);
  if (!Number.isInteger(seed)) {
    throw new UsageError(`--seed must be an integer, got ${JSON.stringify(values.seed)}`);
  }
  const split = values.split as string;
  if (split !== "all" && !(SPLITS as readonly string[]).includes(split)) {
    throw new UsageError(`--split must be all or one of ${SPLITS.join(", ")}, got ${JSON.stringify(split)}`);
  }
  return {
    manifest: values.manifest,
    out: values.out,
    modelTag: values["model-tag"] as string,
    seed,
    split: split as Split | "all",
    raw: values.raw as boolean,
  };
}

function entriesFor(manifest: Manifest, split: Split | "all"): ManifestEntry[] {
  return split === "all" ? manifest.entries : splitEntries(manifest, split);
}

function loadFrame(framePath: string): ReturnType<typeof decodePgm> {
  if (path.extname(framePath).toLowerCase() !== ".pgm") {
    throw new UnsupportedFormat(`${framePath}: only binary PGM frames are supported`);
  }
  return decodePgm(fs.readFileSync(framePath));
}

function runExtract(args: ExtractArgs): void {
  const manifest = loadManifest(args.manifest);
  const entries = entriesFor(manifest, args.split);
  if (entries.length === 0) {
    throw new UsageError(`manifest has no entries in split ${JSON.stringify(args.split)}`);
  }
  const records: Array<readonly [string, Float32Array]> = [];
  const frameIndex: Record<string, number> = {};
  for (const entry of entries) {
    const chosen = selectFrame(entry.framePaths.length, args.seed, entry.sourceId);
    const framePath = entry.framePaths[chosen];
    if (!args.raw) {
      const sidecar = path.join(path.dirname(framePath), SIDECAR);
      if (!fs.existsSync(sidecar)) {
        throw new UsageError(
          `${framePath}: no ${SIDECAR} sidecar, so the frame does not look diffused ` +
            `(run the diffusion stage first, or pass --raw)`,
        );
      }
    }
    const feature = makeDeepFeature(loadFrame(framePath), entry.sourceId, chosen, args.modelTag);
    records.push([feature.sourceId, feature.vector]);
    frameIndex[feature.sourceId] = feature.frameIndex;
  }
  writeFeatures(args.out, "deep", records);
  writeJsonDoc(args.out + ".meta.json", {
    frame_index: frameIndex,
    input: args.raw ? "raw" : "diffused",
    model_tag: args.modelTag,
    seed: args.seed,
  });
  process.stdout.write(`model=${args.modelTag}\n`);
  process.stdout.write(`records=${records.length}\n`);
  process.stdout.write(`out=${args.out}\n`);
}

export function main(argv: string[]): number {
  const command = argv[0];
  if (command === "--help" || command === "-h") {
    process.stdout.write(USAGE + "\n");
    return 0;
  }
  if (command !== "extract") {
    process.stderr.write(USAGE + "\n");
    return 1;
  }
  try {
    const args = parseExtractArgs(argv.slice(1));
    runExtract(args);
    return 0;
  } catch (err) {
    if (err instanceof UsageError && err.message === "help") {
      process.stdout.write(USAGE + "\n");
      return 0;
    }
    const message = err instanceof Error ? err.message : String(err);
    process.stderr.write(`deepfeat: ${message}\n`);
    return 1;
  }
}

function invokedDirectly(): boolean {
  if (!process.argv[1]) {
    return false;
  }
  try {
    // realpath both sides so the npm bin symlink still matches
    return fs.realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exitCode = main(process.argv.slice(2));
}
