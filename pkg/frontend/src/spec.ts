/**
 * Plot specification: which traces to draw, which columns, where to put
 * the image. Loaded from a JSON file and validated strictly so a bad
 * spec fails before any file is touched.
 */

import * as fs from "fs";

export const X_COLUMNS = [
  "effective_passes",
  "wall_seconds",
  "simulated_parallel_cost",
] as const;
export const Y_COLUMNS = ["gap", "primal", "lambda_x"] as const;

export type XColumn = (typeof X_COLUMNS)[number];
export type YColumn = (typeof Y_COLUMNS)[number];

export interface PlotSpec {
  /** One glob per series; every matching CSV contributes one seed. */
  inputs: string[];
  labels: string[];
  x: XColumn;
  y: YColumn;
  logy: boolean;
  output: string;
  title?: string;
}

export class SpecError extends Error {}

export function parseSpec(raw: unknown): PlotSpec {
  if (typeof raw !== "object" || raw === null) {
    throw new SpecError("spec must be a JSON object");
  }
  const o = raw as Record<string, unknown>;
  if (!Array.isArray(o.inputs) || o.inputs.length === 0) {
    throw new SpecError("spec.inputs must list at least one glob");
  }
  if (!o.inputs.every((g) => typeof g === "string")) {
    throw new SpecError("spec.inputs must be strings");
  }
  const labels = Array.isArray(o.labels) ? (o.labels as string[]) : [];
  if (labels.length !== o.inputs.length) {
    throw new SpecError("spec.labels must match spec.inputs in length");
  }
  const x = (o.x ?? "effective_passes") as string;
  if (!(X_COLUMNS as readonly string[]).includes(x)) {
    throw new SpecError(`spec.x must be one of ${X_COLUMNS.join(", ")}`);
  }
  const y = (o.y ?? "gap") as string;
  if (!(Y_COLUMNS as readonly string[]).includes(y)) {
    throw new SpecError(`spec.y must be one of ${Y_COLUMNS.join(", ")}`);
  }
  if (typeof o.output !== "string" || o.output.length === 0) {
    throw new SpecError("spec.output must be a file path");
  }
  return {
    inputs: o.inputs as string[],
    labels,
    x: x as XColumn,
    y: y as YColumn,
    logy: Boolean(o.logy),
    output: o.output,
    title: typeof o.title === "string" ? o.title : undefined,
  };
}

export function loadSpec(path: string): PlotSpec {
  let text: string;
  try {
    text = fs.readFileSync(path, "utf8");
  } catch (e) {
    throw new SpecError(`cannot read spec file ${path}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new SpecError(`spec file ${path} is not valid JSON`);
  }
  return parseSpec(raw);
}
