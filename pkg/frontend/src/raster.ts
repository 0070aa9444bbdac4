/**
 * Minimal PNG output: the already-rendered chart geometry is drawn
 * into an RGBA buffer (Bresenham lines, no text) and encoded with the
 * stock zlib deflate.  SVG remains the faithful format; PNG exists for
 * pipelines that cannot embed vector images.
 */

import { deflateSync } from "node:zlib";
import type { RenderedChart } from "./chart.js";

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (const byte of data) {
    crc = CRC_TABLE[(crc ^ byte) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function chunk(type: string, payload: Uint8Array): Buffer {
  const head = Buffer.alloc(8);
  head.writeUInt32BE(payload.length, 0);
  head.write(type, 4, "latin1");
  const body = Buffer.concat([head.subarray(4), payload]);
  const tail = Buffer.alloc(4);
  tail.writeUInt32BE(crc32(body), 0);
  return Buffer.concat([head.subarray(0, 4), body, tail]);
}

class Canvas {
  readonly pixels: Uint8Array;

  constructor(readonly width: number, readonly height: number) {
    this.pixels = new Uint8Array(width * height * 4).fill(255);
  }

  set(x: number, y: number, [r, g, b]: [number, number, number]) {
    x = Math.round(x);
    y = Math.round(y);
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const at = (y * this.width + x) * 4;
    this.pixels[at] = r;
    this.pixels[at + 1] = g;
    this.pixels[at + 2] = b;
    this.pixels[at + 3] = 255;
  }

  line(x0: number, y0: number, x1: number, y1: number, color: [number, number, number]) {
    x0 = Math.round(x0);
    y0 = Math.round(y0);
    x1 = Math.round(x1);
    y1 = Math.round(y1);
    const dx = Math.abs(x1 - x0);
    const dy = -Math.abs(y1 - y0);
    const sx = x0 < x1 ? 1 : -1;
    const sy = y0 < y1 ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(x0, y0, color);
      if (x0 === x1 && y0 === y1) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  encode(): Buffer {
    const stride = this.width * 4;
    const filtered = Buffer.alloc((stride + 1) * this.height);
    for (let y = 0; y < this.height; y++) {
      filtered[y * (stride + 1)] = 0; // filter type None
      filtered.set(
        this.pixels.subarray(y * stride, (y + 1) * stride),
        y * (stride + 1) + 1
      );
    }
    const ihdr = Buffer.alloc(13);
    ihdr.writeUInt32BE(this.width, 0);
    ihdr.writeUInt32BE(this.height, 4);
    ihdr[8] = 8; // bit depth
    ihdr[9] = 6; // RGBA
    return Buffer.concat([
      Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
      chunk("IHDR", ihdr),
      chunk("IDAT", deflateSync(filtered)),
      chunk("IEND", new Uint8Array(0)),
    ]);
  }
}

function hexColor(color: string): [number, number, number] {
  return [
    parseInt(color.slice(1, 3), 16),
    parseInt(color.slice(3, 5), 16),
    parseInt(color.slice(5, 7), 16),
  ];
}

export function chartToPng(chart: RenderedChart, width = 860, height = 420): Buffer {
  const canvas = new Canvas(width, height);
  const margin = { top: 34, right: 20, bottom: 42, left: 72 };
  const black: [number, number, number] = [0, 0, 0];
  canvas.line(margin.left, margin.top, margin.left, height - margin.bottom, black);
  canvas.line(
    margin.left,
    height - margin.bottom,
    width - margin.right,
    height - margin.bottom,
    black
  );
  for (const series of chart.series) {
    const color = hexColor(series.color);
    for (let i = 1; i < series.pixels.length; i++) {
      const [x0, y0] = series.pixels[i - 1];
      const [x1, y1] = series.pixels[i];
      canvas.line(x0, y0, x1, y1, color);
    }
  }
  return canvas.encode();
}
