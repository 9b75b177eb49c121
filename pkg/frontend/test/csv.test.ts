import * as fs from "fs";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { CsvError, column, expandGlob, readTrace } from "../src/csv";
import { tmpdir, writeTrace, HEADER } from "./helpers";

describe("readTrace", () => {
  it("parses the fixed schema with empty cells as NaN", () => {
    const dir = tmpdir();
    const file = writeTrace(dir, "t.csv", [1.0, 0.1, 0.01]);
    const t = readTrace(file);
    expect(t.rows).toBe(3);
    expect(column(t, "gap")).toEqual([1.0, 0.1, 0.01]);
    expect(Number.isNaN(column(t, "lambda_x")[0])).toBe(true);
  });

  it("rejects a wrong header naming the file", () => {
    const dir = tmpdir();
    const file = path.join(dir, "bad.csv");
    fs.writeFileSync(file, "a,b\n1,2\n");
    expect(() => readTrace(file)).toThrowError(/bad\.csv/);
  });

  it("loads wall clock from the sidecar", () => {
    const dir = tmpdir();
    const file = writeTrace(dir, "t.csv", [1.0, 0.5], {
      wall: [0.0, 2.5],
    });
    const t = readTrace(file);
    expect(column(t, "wall_seconds")).toEqual([0.0, 2.5]);
  });

  it("missing column raises a named error", () => {
    const dir = tmpdir();
    const file = writeTrace(dir, "t.csv", [1.0]);
    const t = readTrace(file);
    expect(() => column(t, "nope")).toThrowError(CsvError);
  });
});

describe("expandGlob", () => {
  it("matches stars in basenames, sorted", () => {
    const dir = tmpdir();
    writeTrace(dir, "a_seed2.csv", [1]);
    writeTrace(dir, "a_seed1.csv", [1]);
    writeTrace(dir, "b_seed1.csv", [1]);
    const got = expandGlob(path.join(dir, "a_*.csv"));
    expect(got.map((p) => path.basename(p))).toEqual([
      "a_seed1.csv",
      "a_seed2.csv",
    ]);
  });

  it("returns empty for no matches", () => {
    const dir = tmpdir();
    expect(expandGlob(path.join(dir, "*.csv"))).toEqual([]);
  });
});
