/**
 * CSV reading for the simulator's schema=1 files.
 *
 * Files start with `# ...` comment lines (schema tag plus the resolved
 * config), then a header row, then plain comma-separated values with no
 * quoting. Numbers stay strings here; extraction converts per column.
 */

import { readFileSync } from "fs";

export interface Table {
  path: string;
  header: string[];
  rows: Record<string, string>[];
  comments: string[];
}

export class SchemaError extends Error {}

export function parseCsv(text: string, path = "<string>"): Table {
  const comments: string[] = [];
  let header: string[] | null = null;
  const rows: Record<string, string>[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line) continue;
    if (line.startsWith("#")) {
      comments.push(line);
      continue;
    }
    if (header === null) {
      header = line.split(",").map((c) => c.trim());
      continue;
    }
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${path}: row has ${cells.length} cells, header has ${header.length}`
      );
    }
    const row: Record<string, string> = {};
    header.forEach((col, i) => (row[col] = cells[i]));
    rows.push(row);
  }
  return { path, header: header ?? [], rows, comments };
}

/** Load a table and verify every required column exists (by name). */
export function readTable(path: string, required: string[]): Table {
  const table = parseCsv(readFileSync(path, "utf-8"), path);
  if (table.rows.length === 0) return table; // empty files render empty axes
  for (const col of required) {
    if (!table.header.includes(col)) {
      throw new SchemaError(`${path}: missing column '${col}'`);
    }
  }
  return table;
}

export function num(row: Record<string, string>, col: string): number {
  return Number(row[col]);
}
