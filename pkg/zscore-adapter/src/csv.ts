import * as fs from "node:fs";

/**
 * Read a headerless numeric CSV into a row-major matrix.
 *
 * The host writes one comma-separated row per line. Blank trailing lines
 * are tolerated; anything non-numeric or ragged is an error.
 */
export function readMatrix(path: string): number[][] {
  const text = fs.readFileSync(path, "utf-8");
  const rows: number[][] = [];
  let width = -1;
  for (const line of text.split("\n")) {
    if (line.trim() === "") {
      continue;
    }
    const row = line.split(",").map((cell) => Number(cell));
    if (row.some((v) => !Number.isFinite(v))) {
      throw new Error(`${path}: non-numeric cell in row ${rows.length}`);
    }
    if (width === -1) {
      width = row.length;
    } else if (row.length !== width) {
      throw new Error(`${path}: ragged row ${rows.length}`);
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return rows;
}
