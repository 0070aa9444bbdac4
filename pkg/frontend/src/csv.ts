/**
 * Readers for the two CSV files a simulation run emits.
 *
 * Schemas (header row included, no quoting, Unix newlines):
 *   <name>_offsets.csv   time_ns,node,true_offset_ns
 *   <name>_verdicts.csv  time_ns,node,msg_type,seq_id,verdict,reason,from_adversary
 */

export interface OffsetRow {
  timeNs: number;
  node: string;
  trueOffsetNs: number;
}

export interface VerdictRow {
  timeNs: number;
  node: string;
  msgType: string;
  seqId: number;
  verdict: "accept" | "drop";
  reason: string;
  fromAdversary: boolean;
}

export class SchemaError extends Error {}

function splitRows(text: string): string[][] {
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => line.split(","));
}

function expectHeader(rows: string[][], expected: string[], path: string): string[][] {
  if (rows.length === 0) {
    throw new SchemaError(`${path}: empty file, expected header ${expected.join(",")}`);
  }
  const header = rows[0];
  if (header.length !== expected.length || expected.some((h, i) => header[i] !== h)) {
    throw new SchemaError(
      `${path}: header mismatch, got "${header.join(",")}" expected "${expected.join(",")}"`
    );
  }
  return rows.slice(1);
}

function int(field: string, path: string): number {
  const value = Number(field);
  if (!Number.isFinite(value)) {
    throw new SchemaError(`${path}: non-numeric field "${field}"`);
  }
  return value;
}

export function parseOffsets(text: string, path = "offsets.csv"): OffsetRow[] {
  const rows = expectHeader(splitRows(text), ["time_ns", "node", "true_offset_ns"], path);
  return rows.map(([timeNs, node, offset]) => ({
    timeNs: int(timeNs, path),
    node,
    trueOffsetNs: int(offset, path),
  }));
}

export function parseVerdicts(text: string, path = "verdicts.csv"): VerdictRow[] {
  const rows = expectHeader(
    splitRows(text),
    ["time_ns", "node", "msg_type", "seq_id", "verdict", "reason", "from_adversary"],
    path
  );
  return rows.map(([timeNs, node, msgType, seqId, verdict, reason, fromAdversary]) => {
    if (verdict !== "accept" && verdict !== "drop") {
      throw new SchemaError(`${path}: unknown verdict "${verdict}"`);
    }
    return {
      timeNs: int(timeNs, path),
      node,
      msgType,
      seqId: int(seqId, path),
      verdict,
      reason,
      fromAdversary: fromAdversary === "1",
    };
  });
}

/** Group offset rows into one (time, value) series per node. */
export function offsetSeries(rows: OffsetRow[]): Map<string, Array<[number, number]>> {
  const byNode = new Map<string, Array<[number, number]>>();
  for (const row of rows) {
    let series = byNode.get(row.node);
    if (!series) {
      series = [];
      byNode.set(row.node, series);
    }
    series.push([row.timeNs, row.trueOffsetNs]);
  }
  return byNode;
}

/** Drops per whole second, per node, from the verdict log. */
export function dropTimeline(rows: VerdictRow[]): Map<string, Array<[number, number]>> {
  const buckets = new Map<string, Map<number, number>>();
  let horizon = 0;
  for (const row of rows) {
    const second = Math.floor(row.timeNs / 1e9);
    horizon = Math.max(horizon, second);
    if (row.verdict !== "drop") continue;
    let perNode = buckets.get(row.node);
    if (!perNode) {
      perNode = new Map();
      buckets.set(row.node, perNode);
    }
    perNode.set(second, (perNode.get(second) ?? 0) + 1);
  }
  const out = new Map<string, Array<[number, number]>>();
  for (const [node, perNode] of buckets) {
    const series: Array<[number, number]> = [];
    for (let s = 0; s <= horizon; s++) {
      series.push([s * 1e9, perNode.get(s) ?? 0]);
    }
    out.set(node, series);
  }
  return out;
}
