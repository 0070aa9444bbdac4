/**
 * Parser for the `<name>_summary.txt` file: flat `key: value` lines.
 * Only the fields the charts annotate are surfaced.
 */

export interface RunSummary {
  scenario: string;
  attack: string;
  attackSuccess: boolean;
  attackStartS?: number;
  attackStopS?: number;
  maxAbsOffsetErrorNs?: number;
  raw: Map<string, string>;
}

export function parseSummary(text: string): RunSummary {
  const raw = new Map<string, string>();
  for (const line of text.split("\n")) {
    const sep = line.indexOf(":");
    if (sep < 0) continue;
    raw.set(line.slice(0, sep).trim(), line.slice(sep + 1).trim());
  }
  const num = (key: string): number | undefined => {
    const value = raw.get(key);
    return value === undefined ? undefined : Number(value);
  };
  return {
    scenario: raw.get("scenario") ?? "?",
    attack: raw.get("attack") ?? "none",
    attackSuccess: raw.get("attack_success") === "True",
    attackStartS: num("attack_start_s"),
    attackStopS: num("attack_stop_s"),
    maxAbsOffsetErrorNs: num("max_abs_offset_error_ns"),
    raw,
  };
}
