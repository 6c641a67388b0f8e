/** Hand-rolled SVG line charts. Pure string producers so the scaling
 * math is testable without a DOM. */

import type { SeriesPoint } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = {
  width: 420,
  height: 160,
  padLeft: 56,
  padRight: 10,
  padTop: 8,
  padBottom: 22,
};

export interface Scaled {
  x: (iteration: number) => number;
  y: (value: number) => number;
  xDomain: [number, number];
  yDomain: [number, number];
}

/** Affine maps from data space onto the plot rectangle. */
export function scales(points: SeriesPoint[], g: ChartGeometry): Scaled {
  let x0 = Infinity;
  let x1 = -Infinity;
  let y0 = Infinity;
  let y1 = -Infinity;
  for (const p of points) {
    x0 = Math.min(x0, p.iteration);
    x1 = Math.max(x1, p.iteration);
    y0 = Math.min(y0, p.value);
    y1 = Math.max(y1, p.value);
  }
  if (!Number.isFinite(x0)) {
    x0 = 0;
    x1 = 1;
  }
  if (!Number.isFinite(y0)) {
    y0 = 0;
    y1 = 1;
  }
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) {
    // flat series: pad so the line sits mid-plot
    const eps = Math.max(Math.abs(y0) * 1e-3, 1e-12);
    y0 -= eps;
    y1 += eps;
  }
  const plotW = g.width - g.padLeft - g.padRight;
  const plotH = g.height - g.padTop - g.padBottom;
  return {
    x: (it) => g.padLeft + ((it - x0) / (x1 - x0)) * plotW,
    y: (v) => g.padTop + (1 - (v - y0) / (y1 - y0)) * plotH,
    xDomain: [x0, x1],
    yDomain: [y0, y1],
  };
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return String(Number(v.toPrecision(6)));
}

/** Complete inline-SVG markup for one series. */
export function renderSeriesSVG(
  title: string,
  points: SeriesPoint[],
  g: ChartGeometry = DEFAULT_GEOMETRY,
): string {
  const s = scales(points, g);
  const coords = points
    .map((p) => `${s.x(p.iteration).toFixed(1)},${s.y(p.value).toFixed(1)}`)
    .join(" ");
  const [y0, y1] = s.yDomain;
  const [x0, x1] = s.xDomain;
  const baseY = g.height - g.padBottom;
  return (
    `<svg viewBox="0 0 ${g.width} ${g.height}" class="chart" ` +
    `role="img" aria-label="${title}">` +
    `<rect x="${g.padLeft}" y="${g.padTop}" ` +
    `width="${g.width - g.padLeft - g.padRight}" ` +
    `height="${baseY - g.padTop}" class="chart-bg"/>` +
    `<text x="${g.padLeft + 4}" y="${g.padTop + 12}" ` +
    `class="chart-title">${title}</text>` +
    `<text x="${g.padLeft - 4}" y="${g.padTop + 12}" text-anchor="end" ` +
    `class="chart-tick">${fmt(y1)}</text>` +
    `<text x="${g.padLeft - 4}" y="${baseY}" text-anchor="end" ` +
    `class="chart-tick">${fmt(y0)}</text>` +
    `<text x="${g.padLeft}" y="${g.height - 6}" class="chart-tick">` +
    `${Math.round(x0)}</text>` +
    `<text x="${g.width - g.padRight}" y="${g.height - 6}" ` +
    `text-anchor="end" class="chart-tick">${Math.round(x1)}</text>` +
    (points.length > 1
      ? `<polyline points="${coords}" class="chart-line"/>`
      : "") +
    (points.length === 1
      ? `<circle cx="${s.x(points[0].iteration).toFixed(1)}" ` +
        `cy="${s.y(points[0].value).toFixed(1)}" r="2.5" class="chart-dot"/>`
      : "") +
    `</svg>`
  );
}
