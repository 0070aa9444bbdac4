/**
 * Hand-rolled SVG line charts: no DOM, no plotting library, just
 * strings.  The renderer also returns the per-series point lists it
 * drew, so tests can assert on rendered data instead of pixels.
 */

export interface Marker {
  timeNs: number;
  label: string;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
  markers?: Marker[];
  /** Divide raw y values by this before plotting (e.g. 1e6 for ms). */
  yScale?: number;
}

export interface RenderedSeries {
  name: string;
  color: string;
  /** Data-space points after yScale, in draw order. */
  data: Array<[number, number]>;
  /** Pixel-space polyline actually emitted. */
  pixels: Array<[number, number]>;
}

export interface RenderedChart {
  svg: string;
  series: RenderedSeries[];
  xDomain: [number, number];
  yDomain: [number, number];
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN = { top: 34, right: 20, bottom: 42, left: 72 };

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 1, hi + 1];
  return [lo, hi];
}

function ticks([lo, hi]: [number, number], count = 6): number[] {
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const inc = step * mult;
  const out: number[] = [];
  for (let t = Math.ceil(lo / inc) * inc; t <= hi + inc / 1e6; t += inc) {
    out.push(Math.abs(t) < inc / 1e6 ? 0 : t);
  }
  return out;
}

function fmt(value: number): string {
  if (Math.abs(value) >= 1e6) return value.toExponential(1);
  return Number(value.toPrecision(4)).toString();
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function renderLineChart(
  seriesIn: Map<string, Array<[number, number]>>,
  options: ChartOptions
): RenderedChart {
  const width = options.width ?? 860;
  const height = options.height ?? 420;
  const yScale = options.yScale ?? 1;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const scaled: RenderedSeries[] = [...seriesIn.entries()].map(([name, pts], i) => ({
    name,
    color: PALETTE[i % PALETTE.length],
    data: pts.map(([x, y]) => [x / 1e9, y / yScale] as [number, number]),
    pixels: [],
  }));

  const xDomain = extent(scaled.flatMap((s) => s.data.map((p) => p[0])));
  const yValues = scaled.flatMap((s) => s.data.map((p) => p[1]));
  // Keep zero in frame: traces are errors around nominal time.
  const yDomain = extent([...yValues, 0]);

  const px = (x: number) =>
    MARGIN.left + ((x - xDomain[0]) / (xDomain[1] - xDomain[0])) * plotW;
  const py = (y: number) =>
    MARGIN.top + plotH - ((y - yDomain[0]) / (yDomain[1] - yDomain[0])) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">${esc(options.title)}</text>`
  );

  // Grid and axes.
  for (const t of ticks(yDomain)) {
    const y = py(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${width - MARGIN.right}" y2="${y}" stroke="#ddd"/>`,
      `<text x="${MARGIN.left - 6}" y="${y + 4}" text-anchor="end">${fmt(t)}</text>`
    );
  }
  for (const t of ticks(xDomain, 8)) {
    const x = px(t);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${height - MARGIN.bottom}" stroke="#eee"/>`,
      `<text x="${x}" y="${height - MARGIN.bottom + 16}" text-anchor="middle">${fmt(t)}</text>`
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${height - MARGIN.bottom}" stroke="black"/>`,
    `<line x1="${MARGIN.left}" y1="${height - MARGIN.bottom}" x2="${width - MARGIN.right}" y2="${height - MARGIN.bottom}" stroke="black"/>`,
    `<text x="${width / 2}" y="${height - 8}" text-anchor="middle">${esc(options.xLabel)}</text>`,
    `<text x="16" y="${height / 2}" text-anchor="middle" transform="rotate(-90 16 ${height / 2})">${esc(options.yLabel)}</text>`
  );

  // Attack-phase markers.
  for (const marker of options.markers ?? []) {
    const x = px(marker.timeNs / 1e9);
    if (x < MARGIN.left || x > width - MARGIN.right) continue;
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${height - MARGIN.bottom}" ` +
        `stroke="#b00" stroke-dasharray="5 3"/>`,
      `<text x="${x + 4}" y="${MARGIN.top + 12}" fill="#b00">${esc(marker.label)}</text>`
    );
  }

  // Series.
  for (const series of scaled) {
    series.pixels = series.data.map(([x, y]) => [px(x), py(y)] as [number, number]);
    const points = series.pixels.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" ");
    parts.push(
      `<polyline fill="none" stroke="${series.color}" stroke-width="1.3" points="${points}"/>`
    );
  }

  // Legend.
  scaled.forEach((series, i) => {
    const y = MARGIN.top + 8 + i * 16;
    const x = width - MARGIN.right - 150;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${series.color}" stroke-width="2"/>`,
      `<text x="${x + 28}" y="${y + 4}">${esc(series.name)}</text>`
    );
  });

  parts.push("</svg>");
  return { svg: parts.join("\n"), series: scaled, xDomain, yDomain };
}
