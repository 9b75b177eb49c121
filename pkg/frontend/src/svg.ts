/**
 * SVG assembly: axes, one polyline per series with an optional min-max
 * band, and a legend. Output is deterministic text so identical inputs
 * yield identical bytes.
 */

import { Scale } from "./scale";
import { Series } from "./series";

const WIDTH = 720;
const HEIGHT = 480;
export const MARGIN = { left: 70, right: 20, top: 36, bottom: 48 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function px(v: number): string {
  return v.toFixed(2);
}

export interface RenderOptions {
  xLabel: string;
  yLabel: string;
  title?: string;
}

export function renderSvg(
  series: Series[],
  xScale: Scale,
  yScale: Scale,
  opts: RenderOptions
): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;

  // grid and ticks
  for (const t of xScale.ticks()) {
    const gx = xScale.toPixel(t.value);
    parts.push(
      `<line x1="${px(gx)}" y1="${y0}" x2="${px(gx)}" y2="${y1}" ` +
        `stroke="#dddddd" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${px(gx)}" y="${y0 + 16}" text-anchor="middle">${esc(
        t.label
      )}</text>`
    );
  }
  for (const t of yScale.ticks()) {
    const gy = yScale.toPixel(t.value);
    parts.push(
      `<line x1="${x0}" y1="${px(gy)}" x2="${x1}" y2="${px(gy)}" ` +
        `stroke="#dddddd" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${x0 - 6}" y="${px(gy + 4)}" text-anchor="end">${esc(
        t.label
      )}</text>`
    );
  }
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" ` +
      `fill="none" stroke="#333333"/>`
  );

  // series: band first (under the line), then the mean polyline
  series.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length];
    if (s.seeds > 1 && s.x.length > 1) {
      const upper = s.x.map(
        (v, i) => `${px(xScale.toPixel(v))},${px(yScale.toPixel(s.hi[i]))}`
      );
      const lower = s.x
        .map(
          (v, i) => `${px(xScale.toPixel(v))},${px(yScale.toPixel(s.lo[i]))}`
        )
        .reverse();
      parts.push(
        `<polygon class="band" points="${upper.concat(lower).join(" ")}" ` +
          `fill="${color}" opacity="0.15"/>`
      );
    }
    const pts = s.x.map(
      (v, i) => `${px(xScale.toPixel(v))},${px(yScale.toPixel(s.mean[i]))}`
    );
    parts.push(
      `<polyline class="series" fill="none" stroke="${color}" ` +
        `stroke-width="1.8" points="${pts.join(" ")}"/>`
    );
  });

  // legend
  series.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length];
    const ly = y1 + 8 + 18 * k;
    parts.push(
      `<line x1="${x1 - 150}" y1="${ly}" x2="${x1 - 120}" y2="${ly}" ` +
        `stroke="${color}" stroke-width="2"/>`
    );
    parts.push(
      `<text class="legend" x="${x1 - 114}" y="${ly + 4}">${esc(
        s.label
      )}</text>`
    );
  });

  // axis labels and title
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle">` +
      `${esc(opts.xLabel)}</text>`
  );
  parts.push(
    `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(opts.yLabel)}</text>`
  );
  if (opts.title) {
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="20" text-anchor="middle" ` +
        `font-size="14">${esc(opts.title)}</text>`
    );
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export { WIDTH, HEIGHT };
