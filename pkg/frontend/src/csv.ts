/**
 * Reader for the simulator's CSV outputs.
 *
 * Files carry '#'-prefixed metadata lines, then a header row, then numeric
 * rows. Rendering never writes back to these files.
 */

import { readFileSync } from "fs";

export interface Table {
  /** column name -> values, file order preserved */
  columns: Map<string, number[]>;
  metadata: Map<string, string>;
  rows: number;
}

export function parseCsv(text: string): Table {
  const metadata = new Map<string, string>();
  const lines = text.split("\n");
  let headerIdx = -1;
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      const colon = body.indexOf(":");
      if (colon > 0) metadata.set(body.slice(0, colon).trim(), body.slice(colon + 1).trim());
      continue;
    }
    headerIdx = i;
    break;
  }
  if (headerIdx < 0) throw new Error("CSV has no header row");
  const names = lines[headerIdx].split(",").map((s) => s.trim());
  const columns = new Map<string, number[]>(names.map((n) => [n, []]));
  let rows = 0;
  for (let i = headerIdx + 1; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(",");
    if (parts.length !== names.length) {
      throw new Error(`row ${i + 1}: expected ${names.length} fields, got ${parts.length}`);
    }
    for (let j = 0; j < names.length; j++) {
      const v = Number(parts[j]);
      if (!Number.isFinite(v) && parts[j].trim().toLowerCase() !== "nan") {
        throw new Error(`row ${i + 1}, column ${names[j]}: not a number: ${parts[j]}`);
      }
      columns.get(names[j])!.push(v);
    }
    rows++;
  }
  if (rows === 0) throw new Error("CSV contains no data rows");
  return { columns, metadata, rows };
}

export function loadTable(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new Error(`cannot read input ${path}: ${(err as Error).message}`);
  }
  try {
    return parseCsv(text);
  } catch (err) {
    throw new Error(`${path}: ${(err as Error).message}`);
  }
}

export function column(table: Table, name: string): number[] {
  const col = table.columns.get(name);
  if (!col) {
    const known = [...table.columns.keys()].join(", ");
    throw new Error(`column ${name} not found (have: ${known})`);
  }
  return col;
}
