/** Diverging (blue-white-red) and sequential colormaps for heatmaps. */

export type Rgb = [number, number, number];

const DIVERGING_STOPS: Array<[number, Rgb]> = [
  [0.0, [5, 48, 97]],
  [0.25, [67, 147, 195]],
  [0.5, [247, 247, 247]],
  [0.75, [214, 96, 77]],
  [1.0, [103, 0, 31]],
];

const SEQUENTIAL_STOPS: Array<[number, Rgb]> = [
  [0.0, [13, 8, 135]],
  [0.33, [126, 3, 168]],
  [0.66, [225, 100, 98]],
  [1.0, [240, 249, 33]],
];

function interpolate(stops: Array<[number, Rgb]>, t: number): Rgb {
  const clamped = Math.min(1, Math.max(0, t));
  for (let i = 1; i < stops.length; i++) {
    const [t1, c1] = stops[i];
    const [t0, c0] = stops[i - 1];
    if (clamped <= t1) {
      const u = (clamped - t0) / (t1 - t0);
      return [
        Math.round(c0[0] + u * (c1[0] - c0[0])),
        Math.round(c0[1] + u * (c1[1] - c0[1])),
        Math.round(c0[2] + u * (c1[2] - c0[2])),
      ];
    }
  }
  return stops[stops.length - 1][1];
}

export function css(rgb: Rgb): string {
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}

/** Symmetric about zero: value/limit in [-1, 1] maps blue..white..red. */
export function diverging(value: number, limit: number): Rgb {
  const t = 0.5 + 0.5 * Math.min(1, Math.max(-1, value / limit));
  return interpolate(DIVERGING_STOPS, t);
}

export function sequential(t: number): Rgb {
  return interpolate(SEQUENTIAL_STOPS, t);
}
