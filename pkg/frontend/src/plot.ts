/**
 * CLI: `node dist/plot.js <spec.json>`.
 *
 * Reads the trace CSVs named by the spec's globs (one series per glob,
 * multi-seed globs drawn as mean with a min-max band), renders an SVG,
 * and writes it to spec.output. Exit 0 on success, 1 on validation
 * errors (bad spec, empty glob, missing column, malformed CSV).
 */

import * as fs from "fs";
import * as path from "path";

import { CsvError, expandGlob, readTrace } from "./csv";
import { linearScale, logScale } from "./scale";
import { Series, buildSeries, positiveOnly } from "./series";
import { MARGIN, HEIGHT, WIDTH, renderSvg } from "./svg";
import { PlotSpec, SpecError, loadSpec } from "./spec";

export function render(spec: PlotSpec): string {
  const series: Series[] = [];
  for (let k = 0; k < spec.inputs.length; k++) {
    const files = expandGlob(spec.inputs[k]).filter((f) => f.endsWith(".csv"));
    if (files.length === 0) {
      throw new CsvError(`glob matched no trace files: ${spec.inputs[k]}`);
    }
    const traces = files.map(readTrace);
    let s = buildSeries(spec.labels[k], traces, spec.x, spec.y);
    if (spec.logy) s = positiveOnly(s);
    if (s.x.length === 0) {
      throw new CsvError(`series ${s.label}: nothing to draw for ${spec.y}`);
    }
    series.push(s);
  }
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => (spec.logy ? s.lo : s.lo.concat(s.hi)));
  const yhis = series.flatMap((s) => s.hi);
  const xScale = linearScale(
    Math.min(...xs),
    Math.max(...xs),
    MARGIN.left,
    WIDTH - MARGIN.right
  );
  const yLo = Math.min(...ys);
  const yHi = Math.max(...yhis);
  const yScale = spec.logy
    ? logScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top)
    : linearScale(yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top);
  return renderSvg(series, xScale, yScale, {
    xLabel: spec.x.replace(/_/g, " "),
    yLabel: spec.y === "lambda_x" ? "forcing value" : spec.y,
    title: spec.title,
  });
}

export function main(argv: string[]): number {
  if (argv.length !== 1) {
    process.stderr.write("usage: plot <spec.json>\n");
    return 1;
  }
  try {
    const spec = loadSpec(argv[0]);
    const svg = render(spec);
    fs.mkdirSync(path.dirname(path.resolve(spec.output)), { recursive: true });
    fs.writeFileSync(spec.output, svg);
    process.stderr.write(`wrote ${spec.output}\n`);
    return 0;
  } catch (e) {
    if (e instanceof SpecError || e instanceof CsvError) {
      process.stderr.write(`error: ${(e as Error).message}\n`);
      return 1;
    }
    process.stderr.write(`unexpected failure: ${(e as Error).stack}\n`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
