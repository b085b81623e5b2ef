/** Clip manifest parsing.
 *
 * The manifest is the tab-separated index the pipeline package consumes:
 * one line per clip with source_id, split, label, and a comma-separated
 * list of frame paths. Relative frame paths resolve against the
 * manifest's directory, so a corpus stays relocatable as one tree.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { DuplicateId, MissingFile, ParseError } from "./errors.js";

export const SPLITS = ["train", "devel", "test"] as const;
export const LABELS = ["live", "fake"] as const;

export type Split = (typeof SPLITS)[number];
export type Label = (typeof LABELS)[number];

export interface ManifestEntry {
  sourceId: string;
  split: Split;
  label: Label;
  framePaths: string[];
}

export interface Manifest {
  entries: ManifestEntry[];
}

export function splitEntries(manifest: Manifest, split: Split): ManifestEntry[] {
  if (!SPLITS.includes(split)) {
    throw new Error(`split must be one of ${SPLITS.join(", ")}, got ${JSON.stringify(split)}`);
  }
  return manifest.entries.filter((e) => e.split === split);
}

export function loadManifest(manifestPath: string): Manifest {
  if (!fs.existsSync(manifestPath)) {
    throw new MissingFile(`manifest not found: ${manifestPath}`);
  }
  const base = path.dirname(path.resolve(manifestPath));
  const text = fs.readFileSync(manifestPath, "utf-8");
  const entries: ManifestEntry[] = [];
  const seen = new Set<string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const lineno = i + 1;
    const line = lines[i];
    if (!line.trim()) {
      continue;
    }
    const fields = line.split("\t");
    if (fields.length !== 4) {
      throw new ParseError(`expected 4 tab-separated fields, got ${fields.length}`, lineno);
    }
    const [sourceId, split, label, pathsField] = fields;
    if (!sourceId) {
      throw new ParseError("empty source_id", lineno);
    }
    if (!(SPLITS as readonly string[]).includes(split)) {
      throw new ParseError(`split must be one of ${SPLITS.join(", ")}, got ${JSON.stringify(split)}`, lineno);
    }
    if (!(LABELS as readonly string[]).includes(label)) {
      throw new ParseError(`label must be one of ${LABELS.join(", ")}, got ${JSON.stringify(label)}`, lineno);
    }
    const paths = pathsField.split(",").filter((p) => p);
    if (paths.length === 0) {
      throw new ParseError("entry lists no frame paths", lineno);
    }
    if (seen.has(sourceId)) {
      throw new DuplicateId(`duplicate source_id ${JSON.stringify(sourceId)} at line ${lineno}`);
    }
    seen.add(sourceId);
    const resolved = paths.map((p) => (path.isAbsolute(p) ? p : path.join(base, p)));
    entries.push({ sourceId, split: split as Split, label: label as Label, framePaths: resolved });
  }
  if (entries.length === 0) {
    throw new ParseError("manifest contains no entries");
  }
  const absent = new Set<string>();
  for (const entry of entries) {
    for (const p of entry.framePaths) {
      if (!fs.existsSync(p)) {
        absent.add(p);
      }
    }
  }
  if (absent.size > 0) {
    throw new MissingFile("missing frame files: " + [...absent].sort().join(", "));
  }
  return { entries };
}
