/**
 * Figure builders: each consumes parsed simulator tables and returns a full
 * SVG document string. No physics is recomputed here; the scripts only plot
 * what the simulation CLI serialized.
 */

import { Table, column } from "./csv.js";
import { css, diverging, sequential } from "./colormap.js";
import {
  HEIGHT,
  MARGIN,
  WIDTH,
  axes,
  document as svgDocument,
  extent,
  fmt,
  legend,
  linearScale,
  polyline,
} from "./svg.js";

export const WIGNER_LIMIT = 2 / Math.PI;

const PALETTE = ["#4363d8", "#e6194b", "#3cb44b", "#911eb4", "#f58231", "#4699c9"];

export interface FigureSpec {
  kind: "wigner_heatmap" | "cut" | "sweep_curve" | "landscape" | "bloch_components";
  inputs: string[];
  output: string;
  title?: string;
  x_label?: string;
  y_label?: string;
  x_column?: string;
  series?: string[];
}

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

function colorbar(limit: number, label: string, divergingScale: boolean): string {
  const { x1, y0, y1 } = plotArea();
  const bx = x1 + 18;
  const bw = 16;
  const steps = 64;
  const parts: string[] = [];
  for (let i = 0; i < steps; i++) {
    const t = i / (steps - 1);
    const rgb = divergingScale ? diverging((2 * t - 1) * limit, limit) : sequential(t);
    const yTop = y0 - ((i + 1) / steps) * (y0 - y1);
    parts.push(
      `<rect x="${bx}" y="${yTop.toFixed(2)}" width="${bw}" height="${((y0 - y1) / steps + 0.5).toFixed(2)}" fill="${css(rgb)}"/>`
    );
  }
  parts.push(`<rect x="${bx}" y="${y1}" width="${bw}" height="${y0 - y1}" fill="none" stroke="#333"/>`);
  const lo = divergingScale ? -limit : 0;
  const hi = limit;
  for (const [t, v] of [[0, lo], [0.5, (lo + hi) / 2], [1, hi]] as Array<[number, number]>) {
    const py = y0 - t * (y0 - y1);
    parts.push(`<text x="${bx + bw + 5}" y="${(py + 4).toFixed(2)}" font-size="11">${fmt(v)}</text>`);
  }
  parts.push(
    `<text x="${bx + bw / 2}" y="${y1 - 10}" text-anchor="middle" font-size="12">${label}</text>`
  );
  return parts.join("\n");
}

/** Phase-space map with a diverging colormap clipped to +-2/pi. */
export function wignerHeatmap(table: Table, spec: FigureSpec): string {
  const re = column(table, "re");
  const im = column(table, "im");
  const w = column(table, "w");
  const xs = uniqueSorted(re);
  const ys = uniqueSorted(im);
  const { x0, x1, y0, y1 } = plotArea();
  const x = linearScale([xs[0], xs[xs.length - 1]], [x0, x1]);
  const y = linearScale([ys[0], ys[ys.length - 1]], [y0, y1]);
  const cellW = (x1 - x0) / Math.max(1, xs.length - 1);
  const cellH = (y0 - y1) / Math.max(1, ys.length - 1);
  const cells: string[] = [];
  for (let k = 0; k < re.length; k++) {
    // clip to the Wigner bound before coloring
    const v = Math.min(WIGNER_LIMIT, Math.max(-WIGNER_LIMIT, w[k]));
    const px = x(re[k]) - cellW / 2;
    const py = y(im[k]) - cellH / 2;
    cells.push(
      `<rect x="${px.toFixed(2)}" y="${py.toFixed(2)}" width="${(cellW + 0.5).toFixed(2)}" ` +
        `height="${(cellH + 0.5).toFixed(2)}" fill="${css(diverging(v, WIGNER_LIMIT))}"/>`
    );
  }
  const body =
    cells.join("\n") +
    "\n" +
    axes(x, y, spec.x_label ?? "Re(beta)", spec.y_label ?? "Im(beta)", spec.title ?? "Wigner function") +
    "\n" +
    colorbar(WIGNER_LIMIT, "W", true);
  return svgDocument(body);
}

/** Multi-series line chart; x_column defaults to the first column. */
export function sweepCurve(table: Table, spec: FigureSpec, yDomain?: [number, number]): string {
  const names = [...table.columns.keys()];
  const xName = spec.x_column ?? names[0];
  const xVals = column(table, xName);
  const seriesNames = spec.series ?? names.filter((n) => n !== xName);
  if (seriesNames.length === 0) throw new Error("no series columns to plot");
  const { x0, x1, y0, y1 } = plotArea();
  const x = linearScale(extent(xVals), [x0, x1]);
  const allY = seriesNames.flatMap((n) => column(table, n)).filter((v) => Number.isFinite(v));
  const y = linearScale(yDomain ?? extent(allY), [y0, y1]);
  const lines = seriesNames.map((name, i) =>
    polyline(xVals, column(table, name), x, y, PALETTE[i % PALETTE.length])
  );
  const body =
    lines.join("\n") +
    "\n" +
    axes(x, y, spec.x_label ?? xName, spec.y_label ?? "value", spec.title ?? "") +
    "\n" +
    legend(seriesNames.map((n, i) => [n, PALETTE[i % PALETTE.length]]));
  return svgDocument(body);
}

/** Fringe-cut comparison (the ideal / ramsey / enhanced overlay). */
export function cutFigure(table: Table, spec: FigureSpec): string {
  return sweepCurve(table, { ...spec, x_column: spec.x_column ?? "im" });
}

/** Bloch components vs gate angle, fixed [-1, 1] range. */
export function blochComponents(table: Table, spec: FigureSpec): string {
  const names = [...table.columns.keys()];
  const series =
    spec.series ?? names.filter((n) => n.startsWith("sx") || n.startsWith("sy") || n.startsWith("sz"));
  if (series.length === 0) throw new Error("no Bloch-component columns found");
  return sweepCurve(table, { ...spec, series, x_column: spec.x_column ?? "theta" }, [-1.05, 1.05]);
}

/** (tau, ratio) trace-distance heatmap with the minimum marked. */
export function landscape(table: Table, spec: FigureSpec): string {
  const taus = column(table, "tau_ns");
  const ratios = column(table, "ratio");
  const t = column(table, "trace_distance");
  const xs = uniqueSorted(taus);
  const ys = uniqueSorted(ratios);
  const finite = t.filter((v) => Number.isFinite(v));
  const [lo, hi] = extent(finite);
  const { x0, x1, y0, y1 } = plotArea();
  const x = linearScale([xs[0], xs[xs.length - 1]], [x0, x1]);
  const y = linearScale([ys[0], ys[ys.length - 1]], [y0, y1]);
  const cellW = (x1 - x0) / Math.max(1, xs.length - 1);
  const cellH = (y0 - y1) / Math.max(1, ys.length - 1);
  const cells: string[] = [];
  let best = Infinity;
  let bestIdx = 0;
  for (let k = 0; k < t.length; k++) {
    if (Number.isFinite(t[k]) && t[k] < best) {
      best = t[k];
      bestIdx = k;
    }
    const fill = Number.isFinite(t[k]) ? css(sequential((t[k] - lo) / (hi - lo || 1))) : "#bbbbbb";
    cells.push(
      `<rect x="${(x(taus[k]) - cellW / 2).toFixed(2)}" y="${(y(ratios[k]) - cellH / 2).toFixed(2)}" ` +
        `width="${(cellW + 0.5).toFixed(2)}" height="${(cellH + 0.5).toFixed(2)}" fill="${fill}"/>`
    );
  }
  const star =
    `<circle cx="${x(taus[bestIdx]).toFixed(2)}" cy="${y(ratios[bestIdx]).toFixed(2)}" r="7" ` +
    `fill="none" stroke="white" stroke-width="2.5"/>`;
  const body =
    cells.join("\n") +
    "\n" +
    star +
    "\n" +
    axes(x, y, spec.x_label ?? "tau (ns)", spec.y_label ?? "tau/sigma", spec.title ?? "Pulse optimization") +
    "\n" +
    colorbar(hi, "T", false);
  return svgDocument(body);
}
