/** Binary PGM (P5) decoding.
 *
 * Intensities come back as float64 in [0, 255] regardless of the stored
 * maxval, matching how the pipeline package normalizes rasters. 16-bit
 * samples are big-endian per the netpbm convention.
 */

import { MalformedFile } from "./errors.js";

export interface GrayFrame {
  width: number;
  height: number;
  /** Row-major intensities, length width * height, each in [0, 255]. */
  pixels: Float64Array;
}

export function decodePgm(data: Uint8Array): GrayFrame {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x35) {
    throw new MalformedFile("not a binary PGM (missing P5 magic)");
  }
  const { fields, offset } = headerFields(data);
  const [width, height, maxval] = fields;
  if (width < 1 || height < 1) {
    throw new MalformedFile(`bad PGM dimensions ${width}x${height}`);
  }
  if (maxval < 1 || maxval > 65535) {
    throw new MalformedFile(`PGM maxval ${maxval} out of range`);
  }
  const sampleBytes = maxval < 256 ? 1 : 2;
  const count = width * height;
  if (data.length - offset < count * sampleBytes) {
    throw new MalformedFile("PGM raster truncated");
  }
  if (data.length - offset > count * sampleBytes) {
    throw new MalformedFile(`${data.length - offset - count * sampleBytes} trailing bytes after raster`);
  }
  const pixels = new Float64Array(count);
  const scale = 255.0 / maxval;
  if (sampleBytes === 1) {
    for (let i = 0; i < count; i++) {
      pixels[i] = maxval === 255 ? data[offset + i] : data[offset + i] * scale;
    }
  } else {
    for (let i = 0; i < count; i++) {
      const hi = data[offset + 2 * i];
      const lo = data[offset + 2 * i + 1];
      pixels[i] = (hi * 256 + lo) * scale;
    }
  }
  return { width, height, pixels };
}

/** Parse width/height/maxval after the magic, honoring # comments. */
function headerFields(data: Uint8Array): { fields: [number, number, number]; offset: number } {
  const fields: number[] = [];
  let pos = 2;
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) {
      pos++;
    }
    if (pos < data.length && data[pos] === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) {
        pos++;
      }
      if (pos === data.length) {
        throw new MalformedFile("bad PGM header: unterminated comment");
      }
      pos++;
      continue;
    }
    let digits = "";
    while (pos < data.length && data[pos] >= 0x30 && data[pos] <= 0x39) {
      digits += String.fromCharCode(data[pos]);
      pos++;
    }
    if (!digits) {
      throw new MalformedFile("bad PGM header: missing numeric header field");
    }
    fields.push(parseInt(digits, 10));
  }
  // exactly one whitespace byte separates the header from the raster
  if (pos >= data.length || !isSpace(data[pos])) {
    throw new MalformedFile("bad PGM header: missing whitespace before raster");
  }
  return { fields: fields as [number, number, number], offset: pos + 1 };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0b || byte === 0x0c;
}
