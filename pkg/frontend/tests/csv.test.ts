import { describe, expect, it } from "vitest";
import { dropTimeline, offsetSeries, parseOffsets, parseVerdicts, SchemaError } from "../src/csv.js";

describe("offsets parser", () => {
  it("parses rows into typed records", () => {
    const rows = parseOffsets("time_ns,node,true_offset_ns\n0,gm,0\n100000000,slave1,-2500\n");
    expect(rows).toEqual([
      { timeNs: 0, node: "gm", trueOffsetNs: 0 },
      { timeNs: 100000000, node: "slave1", trueOffsetNs: -2500 },
    ]);
  });

  it("accepts a header-only file as zero rows", () => {
    expect(parseOffsets("time_ns,node,true_offset_ns\n")).toEqual([]);
  });

  it("rejects a wrong header", () => {
    expect(() => parseOffsets("time,node,offset\n1,a,2\n")).toThrow(SchemaError);
  });

  it("rejects a truly empty file", () => {
    expect(() => parseOffsets("")).toThrow(SchemaError);
  });

  it("rejects non-numeric offsets", () => {
    expect(() => parseOffsets("time_ns,node,true_offset_ns\n1,a,xyz\n")).toThrow(SchemaError);
  });

  it("groups series per node preserving order", () => {
    const rows = parseOffsets(
      "time_ns,node,true_offset_ns\n0,a,1\n0,b,2\n1000,a,3\n1000,b,4\n"
    );
    const series = offsetSeries(rows);
    expect([...series.keys()]).toEqual(["a", "b"]);
    expect(series.get("a")).toEqual([
      [0, 1],
      [1000, 3],
    ]);
  });
});

describe("verdicts parser", () => {
  const HEADER = "time_ns,node,msg_type,seq_id,verdict,reason,from_adversary\n";

  it("parses verdict rows", () => {
    const rows = parseVerdicts(HEADER + "5,slave1,SYNC,17,drop,window_reject,1\n");
    expect(rows[0]).toEqual({
      timeNs: 5,
      node: "slave1",
      msgType: "SYNC",
      seqId: 17,
      verdict: "drop",
      reason: "window_reject",
      fromAdversary: true,
    });
  });

  it("rejects unknown verdict strings", () => {
    expect(() => parseVerdicts(HEADER + "5,a,SYNC,1,maybe,x,0\n")).toThrow(SchemaError);
  });

  it("buckets drops per second with zero-filled gaps", () => {
    const rows = parseVerdicts(
      HEADER +
        "500000000,s,SYNC,1,drop,x,0\n" +
        "900000000,s,SYNC,2,drop,x,0\n" +
        "2500000000,s,SYNC,3,drop,x,0\n" +
        "3100000000,s,SYNC,4,accept,accept,0\n"
    );
    const timeline = dropTimeline(rows);
    expect(timeline.get("s")).toEqual([
      [0, 2],
      [1e9, 0],
      [2e9, 1],
      [3e9, 0],
    ]);
  });
});
