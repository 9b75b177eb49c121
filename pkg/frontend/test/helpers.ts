import * as fs from "fs";
import * as os from "os";
import * as path from "path";

export const HEADER =
  "epoch,effective_passes,simulated_parallel_cost,primal,dual,gap," +
  "lambda_x,theta,potential";

export function tmpdir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "ermcd-plot-"));
}

/** Write a minimal trace CSV (+ sidecar) with the given gap column. */
export function writeTrace(
  dir: string,
  name: string,
  gaps: number[],
  opts: { passesStep?: number; wall?: number[] } = {}
): string {
  const step = opts.passesStep ?? 1.0;
  const lines = [HEADER];
  gaps.forEach((g, k) => {
    const primal = g + 1.0;
    const dual = 1.0;
    lines.push(
      `${k},${k * step},${k * 100},${primal},${dual},${g},,,`
    );
  });
  const file = path.join(dir, name);
  fs.writeFileSync(file, lines.join("\n") + "\n");
  const meta = {
    seed: 0,
    wall_seconds: opts.wall ?? gaps.map((_, k) => 0.1 * k),
  };
  fs.writeFileSync(
    file.replace(/\.csv$/, ".meta.json"),
    JSON.stringify(meta)
  );
  return file;
}
