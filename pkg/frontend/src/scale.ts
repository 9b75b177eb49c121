/** Linear and logarithmic axis scales with tick generation. */

export interface Scale {
  toPixel(v: number): number;
  ticks(): { value: number; label: string }[];
  domain: [number, number];
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(0).replace("+", "");
  return Number(v.toPrecision(4)).toString();
}

export function linearScale(
  lo: number,
  hi: number,
  pxLo: number,
  pxHi: number
): Scale {
  if (hi <= lo) hi = lo + 1;
  const span = hi - lo;
  const step = niceStep(span / 5);
  const first = Math.ceil(lo / step) * step;
  const ticks: { value: number; label: string }[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) {
    ticks.push({ value: v, label: fmt(v) });
  }
  return {
    domain: [lo, hi],
    toPixel: (v) => pxLo + ((v - lo) / span) * (pxHi - pxLo),
    ticks: () => ticks,
  };
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

export function logScale(
  lo: number,
  hi: number,
  pxLo: number,
  pxHi: number
): Scale {
  if (lo <= 0) throw new Error("log scale needs a positive lower bound");
  if (hi <= lo) hi = lo * 10;
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const ticks: { value: number; label: string }[] = [];
  const dec0 = Math.ceil(llo - 1e-9);
  const dec1 = Math.floor(lhi + 1e-9);
  const every = Math.max(1, Math.ceil((dec1 - dec0) / 8));
  for (let d = dec0; d <= dec1; d += every) {
    ticks.push({ value: Math.pow(10, d), label: `1e${d}` });
  }
  return {
    domain: [lo, hi],
    toPixel: (v) => pxLo + ((Math.log10(v) - llo) / (lhi - llo)) * (pxHi - pxLo),
    ticks: () => ticks,
  };
}
