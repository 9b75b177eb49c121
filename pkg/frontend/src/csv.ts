/**
 * Reader for the solver trace CSVs. The schema is fixed: nine named
 * columns, empty cells meaning "undefined at this checkpoint".
 * wall-clock timing lives in the .meta.json sidecar next to each CSV.
 */

import * as fs from "fs";
import * as path from "path";
import Papa from "papaparse";

export const TRACE_COLUMNS = [
  "epoch",
  "effective_passes",
  "simulated_parallel_cost",
  "primal",
  "dual",
  "gap",
  "lambda_x",
  "theta",
  "potential",
] as const;

export type TraceColumn = (typeof TRACE_COLUMNS)[number];

export interface TraceFile {
  path: string;
  /** column -> values; NaN marks empty cells */
  columns: Map<string, number[]>;
  rows: number;
}

export class CsvError extends Error {}

export function readTrace(file: string): TraceFile {
  const text = fs.readFileSync(file, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new CsvError(`${file}: ${parsed.errors[0].message}`);
  }
  const [header, ...body] = parsed.data;
  const expected = TRACE_COLUMNS as readonly string[];
  if (header.length !== expected.length || !expected.every((c, i) => header[i] === c)) {
    throw new CsvError(
      `${file}: unexpected header [${header.join(",")}], ` +
        `expected [${expected.join(",")}]`
    );
  }
  const columns = new Map<string, number[]>();
  for (const c of expected) columns.set(c, []);
  for (const line of body) {
    expected.forEach((c, i) => {
      const cell = line[i] ?? "";
      columns.get(c)!.push(cell === "" ? NaN : Number(cell));
    });
  }
  const trace: TraceFile = { path: file, columns, rows: body.length };
  loadWallClock(trace);
  return trace;
}

/** Pull per-row wall_seconds out of the metadata sidecar when present. */
function loadWallClock(trace: TraceFile): void {
  const sidecar = trace.path.replace(/\.csv$/, ".meta.json");
  if (!fs.existsSync(sidecar)) return;
  try {
    const meta = JSON.parse(fs.readFileSync(sidecar, "utf8"));
    if (Array.isArray(meta.wall_seconds)) {
      const wall = (meta.wall_seconds as number[]).slice(0, trace.rows);
      while (wall.length < trace.rows) wall.push(NaN);
      trace.columns.set("wall_seconds", wall);
    }
  } catch {
    // a broken sidecar only disables the wall-clock axis
  }
}

export function column(trace: TraceFile, name: string): number[] {
  const values = trace.columns.get(name);
  if (values === undefined) {
    throw new CsvError(`${trace.path}: missing column ${name}`);
  }
  return values;
}

/** Expand globs against the filesystem (supports * and ? in basenames
 *  and directory components, no recursion operators). */
export function expandGlob(pattern: string): string[] {
  const parts = path.resolve(pattern).split(path.sep).filter((p) => p !== "");
  let candidates: string[] = [path.sep];
  for (const part of parts) {
    const next: string[] = [];
    if (!part.includes("*") && !part.includes("?")) {
      for (const dir of candidates) {
        const joined = path.join(dir, part);
        if (fs.existsSync(joined)) next.push(joined);
      }
    } else {
      const re = new RegExp(
        "^" +
          part
            .replace(/[.+^${}()|[\]\\]/g, "\\$&")
            .replace(/\*/g, ".*")
            .replace(/\?/g, ".") +
          "$"
      );
      for (const dir of candidates) {
        if (!fs.existsSync(dir) || !fs.statSync(dir).isDirectory()) continue;
        for (const entry of fs.readdirSync(dir).sort()) {
          if (re.test(entry)) next.push(path.join(dir, entry));
        }
      }
    }
    candidates = next;
  }
  return candidates.sort();
}
