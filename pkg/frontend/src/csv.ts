/**
 * Minimal CSV handling for the simulator's output tables.
 *
 * The files are machine-written: comma-separated, no quoting, LF endings,
 * '.' decimal separator, empty cells marking window gaps.
 */

export interface CsvTable {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV document");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new Error(`CSV row has ${row.length} cells, header has ${header.length}`);
    }
  }
  return { header, rows };
}

/** Column accessor that fails loudly when a header is missing. */
export function columnIndex(table: CsvTable, name: string, file: string): number {
  const i = table.header.indexOf(name);
  if (i < 0) {
    throw new Error(`missing column "${name}" in ${file} (header: ${table.header.join(",")})`);
  }
  return i;
}

export function toNumber(cell: string): number {
  const v = Number(cell);
  if (cell === "" || Number.isNaN(v)) {
    throw new Error(`expected a number, got "${cell}"`);
  }
  return v;
}

/** Empty cells are explicit gap markers and become null. */
export function toNumberOrNull(cell: string): number | null {
  return cell === "" ? null : toNumber(cell);
}
