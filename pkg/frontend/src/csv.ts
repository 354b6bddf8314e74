/**
 * Reader for the pipeline's CSV files: a `# format=` comment line, a header
 * row, then data rows. Values stay as strings until a figure asks for a
 * numeric column; empty cells become NaN there.
 */

import * as fs from "fs";

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text
    .split(/\r?\n/)
    .filter((ln) => ln.length > 0 && !ln.startsWith("#"));
  if (lines.length === 0) {
    throw new Error("no rows");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((ln) => ln.split(","));
  return { header, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(fs.readFileSync(path, "utf-8"));
}

export function requireColumns(table: Table, columns: string[], context: string): void {
  const missing = columns.filter((c) => !table.header.includes(c));
  if (missing.length > 0) {
    throw new Error(`missing columns in ${context}: ${missing.join(", ")}`);
  }
}

export function column(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing columns in table: ${name}`);
  }
  return table.rows.map((r) => r[idx] ?? "");
}

export function numColumn(table: Table, name: string): number[] {
  return column(table, name).map((v) => (v === "" ? NaN : Number(v)));
}

export function filterRows(table: Table, pred: (row: Record<string, string>) => boolean): Table {
  const rows = table.rows.filter((r) => pred(rowRecord(table.header, r)));
  return { header: table.header, rows };
}

export function rowRecord(header: string[], row: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  header.forEach((name, i) => {
    out[name] = row[i] ?? "";
  });
  return out;
}

export function records(table: Table): Record<string, string>[] {
  return table.rows.map((r) => rowRecord(table.header, r));
}

/** Distinct values of a column in first-appearance order. */
export function distinct(table: Table, name: string): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const v of column(table, name)) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}
