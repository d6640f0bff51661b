#!/usr/bin/env node
/**
 * catsim figure renderer
 *
 * Usage:
 *   npm run render -- <figure_spec.json> [more_specs...]
 *
 * Each spec names a figure kind, the simulator CSV input(s), labels, and the
 * output SVG path. Inputs are read-only; rendering is deterministic (same
 * spec + same inputs -> byte-identical SVG).
 */

import { readFileSync, writeFileSync } from "fs";
import { resolve, dirname } from "path";

import { loadTable } from "./csv.js";
import {
  FigureSpec,
  blochComponents,
  cutFigure,
  landscape,
  sweepCurve,
  wignerHeatmap,
} from "./figures.js";

const KINDS = ["wigner_heatmap", "cut", "sweep_curve", "landscape", "bloch_components"] as const;

export function loadSpec(path: string): FigureSpec {
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot parse spec ${path}: ${(err as Error).message}`);
  }
  const spec = doc as FigureSpec;
  if (!KINDS.includes(spec.kind)) {
    throw new Error(`spec ${path}: kind must be one of ${KINDS.join(", ")}`);
  }
  if (!Array.isArray(spec.inputs) || spec.inputs.length === 0) {
    throw new Error(`spec ${path}: inputs must be a non-empty array`);
  }
  if (typeof spec.output !== "string" || spec.output === "") {
    throw new Error(`spec ${path}: output path required`);
  }
  // resolve paths relative to the spec file
  const base = dirname(resolve(path));
  spec.inputs = spec.inputs.map((p) => resolve(base, p));
  spec.output = resolve(base, spec.output);
  return spec;
}

export function renderSpec(spec: FigureSpec): string {
  const table = loadTable(spec.inputs[0]);
  switch (spec.kind) {
    case "wigner_heatmap":
      return wignerHeatmap(table, spec);
    case "cut":
      return cutFigure(table, spec);
    case "sweep_curve":
      return sweepCurve(table, spec);
    case "landscape":
      return landscape(table, spec);
    case "bloch_components":
      return blochComponents(table, spec);
  }
}

export function renderFile(specPath: string): string {
  const spec = loadSpec(specPath);
  const svg = renderSpec(spec);
  writeFileSync(spec.output, svg);
  return spec.output;
}

function main(argv: string[]): number {
  if (argv.length === 0) {
    console.error("usage: render <figure_spec.json> [...]");
    return 2;
  }
  for (const path of argv) {
    try {
      const out = renderFile(path);
      console.log(`SVG -> ${out}`);
    } catch (err) {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
