/**
 * Minimal line-chart SVG emitter: log or linear y-axis, legend, ticks.
 * No drawing dependencies; the output is a plain SVG string.
 */

import { Series } from "./extract.js";

export interface ChartOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
  series: Series[];
  width?: number;
  height?: number;
  warning?: string;
}

const COLORS = ["#4361ee", "#e63946", "#2d6a4f", "#f4a261", "#7209b7",
  "#0096c7", "#9d0208", "#588157"];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function linTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

function decadeTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(Math.log10(min)); e <= Math.ceil(Math.log10(max)); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}

function fmt(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(0).replace("e", "e");
  }
  return Number(v.toPrecision(6)).toString();
}

export function renderChart(opts: ChartOpts): string {
  const W = opts.width ?? 720;
  const H = opts.height ?? 460;
  const m = { left: 72, right: 20, top: 40, bottom: 52 };
  const plotW = W - m.left - m.right;
  const plotH = H - m.top - m.bottom;

  // data ranges; log axes ignore non-positive values for scaling
  const xs = opts.series.flatMap((s) => s.x);
  const ysAll = opts.series.flatMap((s) => s.y);
  const ys = opts.logY ? ysAll.filter((v) => v > 0) : ysAll;
  const hasData = xs.length > 0 && ys.length > 0;
  const xMin = hasData ? Math.min(...xs) : 0;
  const xMax = hasData ? Math.max(...xs) : 1;
  let yMin = hasData ? Math.min(...ys) : opts.logY ? 1e-5 : 0;
  let yMax = hasData ? Math.max(...ys) : 1;
  if (opts.logY) {
    yMin = Math.pow(10, Math.floor(Math.log10(yMin)));
    yMax = Math.pow(10, Math.ceil(Math.log10(yMax)));
    if (yMin === yMax) yMax = yMin * 10;
  } else if (yMin === yMax) {
    yMax = yMin + 1;
  }

  const sx = (v: number) =>
    m.left + (xMax === xMin ? plotW / 2 : ((v - xMin) / (xMax - xMin)) * plotW);
  const sy = (v: number) => {
    const t = opts.logY
      ? (Math.log10(v) - Math.log10(yMin)) / (Math.log10(yMax) - Math.log10(yMin))
      : (v - yMin) / (yMax - yMin);
    return m.top + plotH - t * plotH;
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="22" text-anchor="middle" font-size="15">` +
    `${esc(opts.title)}</text>`
  );

  // axes
  parts.push(
    `<rect x="${m.left}" y="${m.top}" width="${plotW}" height="${plotH}" ` +
    `fill="none" stroke="#333"/>`
  );
  const yTicks = opts.logY ? decadeTicks(yMin, yMax) : linTicks(yMin, yMax, 6);
  for (const v of yTicks) {
    if (v < yMin * (1 - 1e-12) || v > yMax * (1 + 1e-12)) continue;
    const y = sy(v);
    parts.push(`<line x1="${m.left}" y1="${y}" x2="${W - m.right}" y2="${y}" ` +
      `stroke="#ddd"/>`);
    parts.push(`<text x="${m.left - 6}" y="${y + 4}" text-anchor="end">` +
      `${fmt(v)}</text>`);
  }
  for (const v of linTicks(xMin, xMax, 8)) {
    const x = sx(v);
    parts.push(`<line x1="${x}" y1="${m.top}" x2="${x}" y2="${m.top + plotH}" ` +
      `stroke="#eee"/>`);
    parts.push(`<text x="${x}" y="${m.top + plotH + 18}" text-anchor="middle">` +
      `${fmt(v)}</text>`);
  }
  parts.push(
    `<text x="${m.left + plotW / 2}" y="${H - 10}" text-anchor="middle">` +
    `${esc(opts.xLabel)}</text>`
  );
  parts.push(
    `<text x="18" y="${m.top + plotH / 2}" text-anchor="middle" ` +
    `transform="rotate(-90 18 ${m.top + plotH / 2})">${esc(opts.yLabel)}</text>`
  );

  // series
  opts.series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const pts = s.x
      .map((x, j) => [x, s.y[j]] as const)
      .filter(([, y]) => !opts.logY || y > 0); // log axis cannot show zeros
    if (pts.length > 0) {
      const d = pts
        .map(([x, y], j) => `${j === 0 ? "M" : "L"}${sx(x).toFixed(2)},${sy(y).toFixed(2)}`)
        .join(" ");
      parts.push(`<path d="${d}" fill="none" stroke="${color}" stroke-width="1.6"/>`);
      for (const [x, y] of pts) {
        parts.push(`<circle cx="${sx(x).toFixed(2)}" cy="${sy(y).toFixed(2)}" ` +
          `r="2.6" fill="${color}"/>`);
      }
    }
    const ly = m.top + 14 + i * 16;
    parts.push(`<line x1="${m.left + 10}" y1="${ly - 4}" x2="${m.left + 30}" ` +
      `y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${m.left + 36}" y="${ly}">${esc(s.label)}</text>`);
  });

  if (!hasData) {
    parts.push(
      `<text x="${m.left + plotW / 2}" y="${m.top + plotH / 2}" ` +
      `text-anchor="middle" fill="#888">no data</text>`
    );
  }
  if (opts.warning) {
    parts.push(
      `<text x="${m.left}" y="${m.top - 6}" fill="#b00" font-size="11">` +
      `${esc(opts.warning)}</text>`
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}
