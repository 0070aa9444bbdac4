import { describe, expect, it } from "vitest";
import { renderLineChart } from "../src/chart.js";
import { countStepResetCycles, settledValue } from "../src/analysis.js";
import { chartToPng } from "../src/raster.js";
import { parseSummary } from "../src/summary.js";

function series(points: Array<[number, number]>) {
  return new Map([["slave1", points]]);
}

const OPTS = { title: "t", xLabel: "x", yLabel: "y" };

describe("svg line chart", () => {
  it("emits one polyline per series plus scaled point data", () => {
    const chart = renderLineChart(
      new Map([
        ["a", [[0, 0], [1e9, 1e6]] as Array<[number, number]>],
        ["b", [[0, 2e6], [1e9, 3e6]] as Array<[number, number]>],
      ]),
      { ...OPTS, yScale: 1e6 }
    );
    expect(chart.svg.match(/<polyline /g)).toHaveLength(2);
    expect(chart.series[0].data).toEqual([
      [0, 0],
      [1, 1],
    ]);
    expect(chart.yDomain[1]).toBeGreaterThanOrEqual(3);
  });

  it("maps domain extremes onto the plot box edges", () => {
    const chart = renderLineChart(series([[0, 0], [10e9, 100]]), OPTS);
    const [first, last] = [chart.series[0].pixels[0], chart.series[0].pixels[1]];
    expect(first[0]).toBeCloseTo(72); // left margin
    expect(last[0]).toBeCloseTo(860 - 20); // width - right margin
    expect(last[1]).toBeCloseTo(34); // y max at top margin
    expect(first[1]).toBeCloseTo(420 - 42); // y min at bottom margin
  });

  it("draws attack markers as dashed verticals with labels", () => {
    const chart = renderLineChart(series([[0, 0], [10e9, 1]]), {
      ...OPTS,
      markers: [{ timeNs: 5e9, label: "sync_spoof start" }],
    });
    expect(chart.svg).toContain("stroke-dasharray");
    expect(chart.svg).toContain("sync_spoof start");
  });

  it("escapes markup in labels", () => {
    const chart = renderLineChart(series([[0, 0], [1, 1]]), {
      ...OPTS,
      title: "<script>",
    });
    expect(chart.svg).not.toContain("<script>");
    expect(chart.svg).toContain("&lt;script&gt;");
  });
});

describe("png rasterizer", () => {
  it("produces a valid PNG header and non-trivial payload", () => {
    const chart = renderLineChart(series([[0, 0], [1e9, 50], [2e9, 10]]), OPTS);
    const png = chartToPng(chart);
    expect([...png.subarray(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    expect(png.includes("IHDR")).toBe(true);
    expect(png.includes("IEND")).toBe(true);
    expect(png.length).toBeGreaterThan(1000);
  });
});

describe("summary parser", () => {
  it("extracts the annotation fields", () => {
    const summary = parseSummary(
      "scenario: fig3\nattack: sync_spoof\nattack_success: True\n" +
        "attack_start_s: 10.2\nmax_abs_offset_error_ns: 30000000000\n"
    );
    expect(summary.attack).toBe("sync_spoof");
    expect(summary.attackSuccess).toBe(true);
    expect(summary.attackStartS).toBeCloseTo(10.2);
    expect(summary.attackStopS).toBeUndefined();
  });
});

describe("step-reset cycle counter", () => {
  it("counts a synthetic sawtooth", () => {
    const points: Array<[number, number]> = [];
    for (let cycle = 0; cycle < 5; cycle++) {
      for (let i = 0; i < 8; i++) points.push([points.length, 0]);
      for (let i = 0; i < 8; i++) points.push([points.length, 100]);
    }
    points.push([points.length, 0]);
    expect(countStepResetCycles(points)).toBe(5);
  });

  it("sees no cycles in a flat or monotone trace", () => {
    expect(countStepResetCycles([[0, 5], [1, 5], [2, 5]])).toBe(0);
    expect(countStepResetCycles([[0, 0], [1, 50], [2, 100]])).toBe(0);
  });

  it("ignores jitter that never crosses both thresholds", () => {
    const noisy: Array<[number, number]> = Array.from({ length: 50 }, (_, i) => [
      i,
      50 + (i % 2 ? 3 : -3),
    ]);
    noisy.push([50, 0], [51, 100]); // fix the range
    expect(countStepResetCycles(noisy)).toBe(0);
  });
});

describe("settling value", () => {
  it("averages the trace tail", () => {
    const points: Array<[number, number]> = Array.from({ length: 100 }, (_, i) => [
      i,
      i < 80 ? 1000 : 400,
    ]);
    expect(settledValue(points, 0.2)).toBe(400); // tail fully past the transition
    expect(settledValue(points)).toBeCloseTo((5 * 1000 + 20 * 400) / 25); // quarter tail straddles it
  });
});
