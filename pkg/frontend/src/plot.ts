#!/usr/bin/env node
/**
 * Render every simulation run found in a directory.
 *
 *   plot <run-dir> [--format png|svg]
 *
 * For each `<name>_offsets.csv` (with its sibling `<name>_verdicts.csv`
 * and `<name>_summary.txt`) this writes `<name>_offsets.<fmt>` and
 * `<name>_drops.<fmt>` next to the inputs: the clock-error trace per
 * node with attack start/stop markers, and a drops-per-second timeline.
 *
 * Everything is read from the CSV/summary files; no protocol quantity
 * is recomputed here.
 */

import { existsSync, readFileSync, readdirSync, writeFileSync } from "node:fs";
import { basename, join } from "node:path";
import { dropTimeline, offsetSeries, parseOffsets, parseVerdicts, SchemaError } from "./csv.js";
import { renderLineChart, type Marker, type RenderedChart } from "./chart.js";
import { chartToPng } from "./raster.js";
import { parseSummary, type RunSummary } from "./summary.js";

export interface RunPlots {
  name: string;
  offsets: RenderedChart;
  drops: RenderedChart | null;
  files: string[];
}

function markersFrom(summary: RunSummary | null): Marker[] {
  if (!summary || summary.attack === "none") return [];
  const markers: Marker[] = [];
  if (summary.attackStartS !== undefined) {
    markers.push({ timeNs: summary.attackStartS * 1e9, label: `${summary.attack} start` });
  }
  if (summary.attackStopS !== undefined) {
    markers.push({ timeNs: summary.attackStopS * 1e9, label: "stop" });
  }
  return markers;
}

export function plotRun(runDir: string, name: string, format: "png" | "svg"): RunPlots {
  const offsetsPath = join(runDir, `${name}_offsets.csv`);
  const verdictsPath = join(runDir, `${name}_verdicts.csv`);
  const summaryPath = join(runDir, `${name}_summary.txt`);

  const summary = existsSync(summaryPath)
    ? parseSummary(readFileSync(summaryPath, "utf-8"))
    : null;
  const markers = markersFrom(summary);
  const files: string[] = [];

  const offsetRows = parseOffsets(readFileSync(offsetsPath, "utf-8"), offsetsPath);
  if (offsetRows.length === 0) {
    process.stderr.write(`warning: ${offsetsPath} has no data rows, empty plot\n`);
  }
  const offsets = renderLineChart(offsetSeries(offsetRows), {
    title: `${name}: clock error vs true time`,
    xLabel: "simulated time [s]",
    yLabel: "clock error [ms]",
    yScale: 1e6,
    markers,
  });
  files.push(writeChart(offsets, join(runDir, `${name}_offsets.${format}`), format));

  let drops: RenderedChart | null = null;
  if (existsSync(verdictsPath)) {
    const verdictRows = parseVerdicts(readFileSync(verdictsPath, "utf-8"), verdictsPath);
    const timeline = dropTimeline(verdictRows);
    if (timeline.size > 0) {
      drops = renderLineChart(timeline, {
        title: `${name}: rejected messages per second`,
        xLabel: "simulated time [s]",
        yLabel: "drops / s",
        markers,
      });
      files.push(writeChart(drops, join(runDir, `${name}_drops.${format}`), format));
    }
  }
  return { name, offsets, drops, files };
}

function writeChart(chart: RenderedChart, path: string, format: "png" | "svg"): string {
  writeFileSync(path, format === "svg" ? chart.svg : chartToPng(chart));
  return path;
}

export function discoverRuns(runDir: string): string[] {
  return readdirSync(runDir)
    .filter((f) => f.endsWith("_offsets.csv"))
    .map((f) => basename(f).slice(0, -"_offsets.csv".length))
    .sort();
}

export function main(argv: string[]): number {
  const args = argv.filter((a) => a !== "");
  let format: "png" | "svg" = "svg";
  const positional: string[] = [];
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--format") {
      const value = args[++i];
      if (value !== "png" && value !== "svg") {
        process.stderr.write(`unknown format: ${value}\n`);
        return 2;
      }
      format = value;
    } else {
      positional.push(args[i]);
    }
  }
  if (positional.length !== 1) {
    process.stderr.write("usage: plot <run-dir> [--format png|svg]\n");
    return 2;
  }
  const runDir = positional[0];
  let runs: string[];
  try {
    runs = discoverRuns(runDir);
  } catch {
    process.stderr.write(`cannot read directory: ${runDir}\n`);
    return 2;
  }
  if (runs.length === 0) {
    process.stderr.write(`no *_offsets.csv files in ${runDir}\n`);
    return 2;
  }
  for (const name of runs) {
    try {
      const result = plotRun(runDir, name, format);
      for (const file of result.files) {
        process.stdout.write(`wrote ${file}\n`);
      }
    } catch (err) {
      if (err instanceof SchemaError) {
        process.stderr.write(`${err.message}\n`);
        return 1;
      }
      throw err;
    }
  }
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("plot.js") || entry.endsWith("plot.ts")) {
  process.exit(main(process.argv.slice(2)));
}
