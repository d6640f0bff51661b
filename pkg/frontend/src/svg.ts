/**
 * Minimal deterministic SVG chart primitives: fixed canvas, fixed fonts,
 * no timestamps, so identical inputs byte-reproduce the image.
 */

export const WIDTH = 760;
export const HEIGHT = 560;
export const MARGIN = { left: 70, right: 110, top: 48, bottom: 58 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) throw new Error("no finite values to plot");
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  return [lo, hi];
}

export function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

export function ticks(domain: [number, number], n = 6): number[] {
  const [lo, hi] = domain;
  const step = (hi - lo) / (n - 1);
  return Array.from({ length: n }, (_, i) => lo + i * step);
}

export function axes(x: Scale, y: Scale, xLabel: string, yLabel: string, title: string): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333" stroke-width="1"/>`);
  for (const t of ticks(x.domain)) {
    const px = x(t);
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(`<text x="${px.toFixed(2)}" y="${y0 + 20}" text-anchor="middle" font-size="12">${fmt(t)}</text>`);
  }
  for (const t of ticks(y.domain)) {
    const py = y(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#333"/>`);
    parts.push(`<text x="${x0 - 9}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="12">${fmt(t)}</text>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-size="14">${escapeXml(xLabel)}</text>`);
  parts.push(`<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="14" transform="rotate(-90 20 ${(y0 + y1) / 2})">${escapeXml(yLabel)}</text>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="28" text-anchor="middle" font-size="16">${escapeXml(title)}</text>`);
  return parts.join("\n");
}

export function polyline(xs: number[], ys: number[], x: Scale, y: Scale, color: string, width = 1.6, dash?: string): string {
  const pts = xs
    .map((v, i) => (Number.isFinite(ys[i]) ? `${x(v).toFixed(2)},${y(ys[i]).toFixed(2)}` : null))
    .filter((p): p is string => p !== null)
    .join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"${dashAttr}/>`;
}

export function legend(entries: Array<[string, string]>): string {
  const x0 = WIDTH - MARGIN.right + 8;
  return entries
    .map(([label, color], i) => {
      const y = MARGIN.top + 16 + i * 20;
      return (
        `<line x1="${x0}" y1="${y}" x2="${x0 + 18}" y2="${y}" stroke="${color}" stroke-width="2.5"/>` +
        `<text x="${x0 + 23}" y="${y + 4}" font-size="12">${escapeXml(label)}</text>`
      );
    })
    .join("\n");
}

export function document(body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n${body}\n</svg>\n`
  );
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}
