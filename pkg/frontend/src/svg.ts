import { sortSeries, type Series } from "./aggregate.js";

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#bcbd22", "#e377c2", "#7f7f7f",
];

const WIDTH = 720;
const HEIGHT = 460;
const MARGIN = { top: 48, right: 24, bottom: 54, left: 66 };
const FONT = "DejaVu Sans, Helvetica, Arial, sans-serif";

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** pixel coordinate, two fixed decimals so reruns emit identical bytes */
function px(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export interface Ticks {
  step: number;
  values: number[];
}

export function niceTicks(min: number, max: number, target = 6): Ticks {
  if (!(max > min)) {
    min -= 1;
    max += 1;
  }
  const raw = (max - min) / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const i0 = Math.ceil(min / step - 1e-9);
  const i1 = Math.floor(max / step + 1e-9);
  const values: number[] = [];
  for (let i = i0; i <= i1; i++) values.push(i * step + 0); // + 0 turns -0 into 0
  return { step, values };
}

export function tickLabel(v: number, step: number): string {
  const decimals = Math.max(0, -Math.floor(Math.log10(step) + 1e-9));
  const s = v.toFixed(Math.min(decimals, 10));
  return /^-0(\.0*)?$/.test(s) ? s.slice(1) : s;
}

interface Scale {
  (v: number): number;
  min: number;
  max: number;
}

function linearScale(min: number, max: number, rangeMin: number, rangeMax: number): Scale {
  if (!(max > min)) {
    min -= 1;
    max += 1;
  }
  const f = ((v: number) => rangeMin + ((v - min) / (max - min)) * (rangeMax - rangeMin)) as Scale;
  f.min = min;
  f.max = max;
  return f;
}

function pad(min: number, max: number, frac = 0.05): [number, number] {
  const span = max > min ? max - min : 2;
  return [min - frac * span, max + frac * span];
}

interface Frame {
  sx: Scale;
  sy: Scale;
  body: string[];
}

function frame(title: string, xLabel: string, yLabel: string,
               xDomain: [number, number], yDomain: [number, number]): Frame {
  const sx = linearScale(xDomain[0], xDomain[1], MARGIN.left, WIDTH - MARGIN.right);
  const sy = linearScale(yDomain[0], yDomain[1], HEIGHT - MARGIN.bottom, MARGIN.top);
  const xt = niceTicks(sx.min, sx.max);
  const yt = niceTicks(sy.min, sy.max);
  const body: string[] = [];
  body.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  for (const v of xt.values) {
    body.push(`<line x1="${px(sx(v))}" y1="${px(sy(sy.min))}" x2="${px(sx(v))}" y2="${px(sy(sy.max))}" stroke="#e0e0e0" stroke-width="1"/>`);
    body.push(`<text x="${px(sx(v))}" y="${px(sy(sy.min) + 16)}" font-size="11" text-anchor="middle" fill="#333">${tickLabel(v, xt.step)}</text>`);
  }
  for (const v of yt.values) {
    body.push(`<line x1="${px(sx(sx.min))}" y1="${px(sy(v))}" x2="${px(sx(sx.max))}" y2="${px(sy(v))}" stroke="#e0e0e0" stroke-width="1"/>`);
    body.push(`<text x="${px(sx(sx.min) - 8)}" y="${px(sy(v) + 4)}" font-size="11" text-anchor="end" fill="#333">${tickLabel(v, yt.step)}</text>`);
  }
  const axis = `stroke="#333" stroke-width="1.2"`;
  body.push(`<line x1="${px(MARGIN.left)}" y1="${px(HEIGHT - MARGIN.bottom)}" x2="${px(WIDTH - MARGIN.right)}" y2="${px(HEIGHT - MARGIN.bottom)}" ${axis}/>`);
  body.push(`<line x1="${px(MARGIN.left)}" y1="${px(MARGIN.top)}" x2="${px(MARGIN.left)}" y2="${px(HEIGHT - MARGIN.bottom)}" ${axis}/>`);
  body.push(`<text x="${px(WIDTH / 2)}" y="24" font-size="15" text-anchor="middle" fill="#111">${escapeXml(title)}</text>`);
  body.push(`<text x="${px(WIDTH / 2)}" y="${px(HEIGHT - 14)}" font-size="12" text-anchor="middle" fill="#111">${escapeXml(xLabel)}</text>`);
  body.push(`<text transform="translate(16 ${px(HEIGHT / 2)}) rotate(-90)" font-size="12" text-anchor="middle" fill="#111">${escapeXml(yLabel)}</text>`);
  return { sx, sy, body };
}

function document(body: string[]): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="${FONT}">\n${body.join("\n")}\n</svg>\n`;
}

function legend(body: string[], labels: string[]): void {
  const x = WIDTH - MARGIN.right - 10;
  let y = MARGIN.top + 10;
  for (let i = 0; i < labels.length; i++) {
    const color = PALETTE[i % PALETTE.length]!;
    body.push(`<rect x="${px(x - 150)}" y="${px(y - 4)}" width="18" height="4" fill="${color}"/>`);
    body.push(`<text x="${px(x - 126)}" y="${px(y)}" font-size="12" fill="#111">${escapeXml(labels[i]!)}</text>`);
    y += 18;
  }
}

export function linePanel(title: string, xLabel: string, yLabel: string, series: Series[]): string {
  const ordered = sortSeries(series).filter((s) => s.points.length > 0);
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const s of ordered) {
    for (const p of s.points) {
      xMin = Math.min(xMin, p.L);
      xMax = Math.max(xMax, p.L);
      yMin = Math.min(yMin, p.mean - p.std);
      yMax = Math.max(yMax, p.mean + p.std);
    }
  }
  const f = frame(title, xLabel, yLabel, [xMin, xMax], pad(yMin, yMax));
  ordered.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    if (s.points.length > 1) {
      const upper = s.points.map((p) => `${px(f.sx(p.L))},${px(f.sy(p.mean + p.std))}`);
      const lower = [...s.points].reverse().map((p) => `${px(f.sx(p.L))},${px(f.sy(p.mean - p.std))}`);
      f.body.push(`<polygon points="${upper.join(" ")} ${lower.join(" ")}" fill="${color}" fill-opacity="0.18"/>`);
      const line = s.points.map((p) => `${px(f.sx(p.L))},${px(f.sy(p.mean))}`);
      f.body.push(`<polyline points="${line.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    }
    for (const p of s.points) {
      f.body.push(`<circle cx="${px(f.sx(p.L))}" cy="${px(f.sy(p.mean))}" r="2.4" fill="${color}"/>`);
    }
  });
  legend(f.body, ordered.map((s) => s.label));
  return document(f.body);
}

export interface CurveData {
  label: string;
  dashed?: boolean;
  points: { x: number; y: number }[];
}

/** generic x-y curves, used by the scale-factor comparison panel */
export function curvePanel(title: string, xLabel: string, yLabel: string, curves: CurveData[]): string {
  const drawn = curves.filter((c) => c.points.length > 0);
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const c of drawn) {
    for (const p of c.points) {
      xMin = Math.min(xMin, p.x);
      xMax = Math.max(xMax, p.x);
      yMin = Math.min(yMin, p.y);
      yMax = Math.max(yMax, p.y);
    }
  }
  const f = frame(title, xLabel, yLabel, pad(xMin, xMax), pad(yMin, yMax));
  drawn.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const dash = c.dashed ? ` stroke-dasharray="6 4"` : "";
    if (c.points.length > 1) {
      const line = c.points.map((p) => `${px(f.sx(p.x))},${px(f.sy(p.y))}`);
      f.body.push(`<polyline points="${line.join(" ")}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`);
    }
    if (!c.dashed) {
      for (const p of c.points) {
        f.body.push(`<circle cx="${px(f.sx(p.x))}" cy="${px(f.sy(p.y))}" r="2.8" fill="${color}"/>`);
      }
    }
  });
  legend(f.body, drawn.map((c) => c.label));
  return document(f.body);
}

export function histogramPanel(title: string, xLabel: string, values: number[],
                               range: [number, number], binCount: number): string {
  const counts = new Array<number>(binCount).fill(0);
  const [lo, hi] = range;
  const width = (hi - lo) / binCount;
  for (const v of values) {
    let idx = Math.floor((v - lo) / width);
    if (idx === binCount && v === hi) idx = binCount - 1; // right edge inclusive
    if (idx >= 0 && idx < binCount) counts[idx]! += 1;
  }
  const f = frame(title, xLabel, "count", [lo, hi], pad(0, Math.max(1, ...counts), 0.08));
  const y0 = f.sy(0);
  counts.forEach((c, i) => {
    if (c === 0) return;
    const x = f.sx(lo + i * width);
    const w = f.sx(lo + (i + 1) * width) - x;
    const y = f.sy(c);
    f.body.push(`<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(y0 - y)}" fill="#4878a8" stroke="#ffffff" stroke-width="0.5"/>`);
  });
  return document(f.body);
}

export function scatterPanel(title: string, xLabel: string, yLabel: string,
                             points: { x: number; y: number }[]): string {
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const p of points) {
    xMin = Math.min(xMin, p.x);
    xMax = Math.max(xMax, p.x);
    yMin = Math.min(yMin, p.y);
    yMax = Math.max(yMax, p.y);
  }
  const f = frame(title, xLabel, yLabel, pad(xMin, xMax), pad(yMin, yMax));
  for (const p of points) {
    f.body.push(`<circle cx="${px(f.sx(p.x))}" cy="${px(f.sy(p.y))}" r="2.5" fill="#1f77b4" fill-opacity="0.55"/>`);
  }
  return document(f.body);
}
