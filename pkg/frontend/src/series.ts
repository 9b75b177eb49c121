/**
 * Turn a group of seed traces into one drawable series: the per-
 * checkpoint mean with a min-max band. Seeds are aligned by checkpoint
 * index (traces from one experiment share the checkpoint cadence);
 * ragged groups are truncated to the shortest run.
 */

import { CsvError, TraceFile, column } from "./csv";

export interface Series {
  label: string;
  x: number[];
  mean: number[];
  lo: number[];
  hi: number[];
  seeds: number;
}

export function buildSeries(
  label: string,
  traces: TraceFile[],
  xCol: string,
  yCol: string
): Series {
  if (traces.length === 0) {
    throw new CsvError(`series ${label}: no input traces`);
  }
  for (const t of traces) {
    for (const c of [xCol, yCol]) {
      const values = t.columns.get(c);
      if (values === undefined || values.every((v) => Number.isNaN(v))) {
        throw new CsvError(`${t.path}: missing column ${c}`);
      }
    }
  }
  const rows = Math.min(...traces.map((t) => t.rows));
  const x: number[] = [];
  const mean: number[] = [];
  const lo: number[] = [];
  const hi: number[] = [];
  for (let r = 0; r < rows; r++) {
    const xs = traces.map((t) => column(t, xCol)[r]);
    const ys = traces.map((t) => column(t, yCol)[r]).filter((v) => !Number.isNaN(v));
    if (ys.length === 0) continue;
    x.push(xs.reduce((a, b) => a + b, 0) / xs.length);
    mean.push(ys.reduce((a, b) => a + b, 0) / ys.length);
    lo.push(Math.min(...ys));
    hi.push(Math.max(...ys));
  }
  return { label, x, mean, lo, hi, seeds: traces.length };
}

/** Drop points a log-scale axis cannot place. */
export function positiveOnly(s: Series): Series {
  const keep = s.mean.map((v, i) => v > 0 && s.lo[i] > 0);
  const pick = (a: number[]) => a.filter((_, i) => keep[i]);
  return {
    label: s.label,
    x: pick(s.x),
    mean: pick(s.mean),
    lo: pick(s.lo),
    hi: pick(s.hi),
    seeds: s.seeds,
  };
}
