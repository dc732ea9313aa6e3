import { inflateSync } from "node:zlib";
import { describe, expect, it } from "vitest";

import { encodePng } from "../src/png.js";
import { Canvas } from "../src/raster.js";
import { textWidth } from "../src/font.js";

function readChunks(buf: Buffer): { type: string; data: Buffer }[] {
  expect([...buf.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const chunks = [];
  let at = 8;
  while (at < buf.length) {
    const len = buf.readUInt32BE(at);
    const type = buf.subarray(at + 4, at + 8).toString("ascii");
    chunks.push({ type, data: buf.subarray(at + 8, at + 8 + len) });
    at += 12 + len;
  }
  return chunks;
}

describe("png encoder", () => {
  it("emits a decodable structure with correct dimensions", () => {
    const rgb = new Uint8Array(4 * 3 * 3);
    rgb[0] = 255; // top-left red
    const buf = encodePng(4, 3, rgb);
    const chunks = readChunks(buf);
    expect(chunks.map((c) => c.type)).toEqual(["IHDR", "IDAT", "IEND"]);
    expect(chunks[0].data.readUInt32BE(0)).toBe(4);
    expect(chunks[0].data.readUInt32BE(4)).toBe(3);
    const raw = inflateSync(chunks[1].data);
    expect(raw.length).toBe(3 * (1 + 4 * 3));
    expect(raw[0]).toBe(0); // filter byte
    expect(raw[1]).toBe(255); // red pixel came through
  });

  it("rejects a wrong-size buffer", () => {
    expect(() => encodePng(2, 2, new Uint8Array(5))).toThrow(/expected 12/);
  });
});

describe("canvas", () => {
  it("draws text with the bitmap font", () => {
    const c = new Canvas(60, 12);
    c.text(1, 2, "0.5e-3", [0, 0, 0]);
    let dark = 0;
    for (let i = 0; i < c.data.length; i += 3) {
      if (c.data[i] === 0) dark += 1;
    }
    expect(dark).toBeGreaterThan(20); // glyphs actually rendered
    expect(textWidth("0.5e-3")).toBe(6 * 6 - 1);
  });

  it("clips out-of-bounds writes", () => {
    const c = new Canvas(4, 4);
    c.set(-1, 0, [0, 0, 0]);
    c.set(0, 99, [0, 0, 0]);
    c.line(-10, -10, 20, 20, [0, 0, 0]);
    expect(c.data.length).toBe(4 * 4 * 3);
  });
});
