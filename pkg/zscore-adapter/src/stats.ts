/**
 * Moving z-score model.
 *
 * Fit stores per-feature mean and standard deviation of the training span.
 * Scoring standardises each test row against those frozen statistics, sums
 * the squared z-scores into a row energy, and reports for every window of
 * length w the maximum row energy inside it. A test span of T rows yields
 * T - w + 1 scores, one per window end.
 */

/** Frozen per-feature statistics of the training span. */
export interface TrainStats {
  readonly mean: number[];
  readonly std: number[];
}

/** Lower bound applied to each per-feature std so division stays finite. */
export const STD_FLOOR = 1e-12;

/**
 * Compute per-feature mean and population standard deviation.
 *
 * @throws if the matrix is empty or ragged.
 */
export function fitStats(rows: number[][]): TrainStats {
  if (rows.length === 0) {
    throw new Error("training matrix is empty");
  }
  const width = rows[0]!.length;
  const mean = new Array<number>(width).fill(0);
  for (const row of rows) {
    if (row.length !== width) {
      throw new Error("training matrix is ragged");
    }
    for (let j = 0; j < width; j++) {
      mean[j]! += row[j]!;
    }
  }
  for (let j = 0; j < width; j++) {
    mean[j]! /= rows.length;
  }
  const variance = new Array<number>(width).fill(0);
  for (const row of rows) {
    for (let j = 0; j < width; j++) {
      const d = row[j]! - mean[j]!;
      variance[j]! += d * d;
    }
  }
  const std = variance.map((v) => Math.max(Math.sqrt(v / rows.length), STD_FLOOR));
  return { mean, std };
}

/** Sum of squared z-scores of one row against the train statistics. */
export function rowEnergy(row: number[], stats: TrainStats): number {
  let energy = 0;
  for (let j = 0; j < row.length; j++) {
    const z = (row[j]! - stats.mean[j]!) / stats.std[j]!;
    energy += z * z;
  }
  return energy;
}

/**
 * Score every length-w window of the test matrix.
 *
 * @returns one score per window, rows.length - windowLen + 1 in total.
 * @throws if w is out of range for the test span.
 */
export function scoreWindows(
  rows: number[][],
  stats: TrainStats,
  windowLen: number,
): number[] {
  if (!Number.isInteger(windowLen) || windowLen < 1) {
    throw new Error(`window_len must be a positive integer, got ${windowLen}`);
  }
  if (windowLen > rows.length) {
    throw new Error(
      `window_len ${windowLen} exceeds test length ${rows.length}`,
    );
  }
  const energies = rows.map((row) => rowEnergy(row, stats));
  const scores = new Array<number>(rows.length - windowLen + 1);
  for (let end = windowLen - 1; end < rows.length; end++) {
    let best = -Infinity;
    for (let i = end - windowLen + 1; i <= end; i++) {
      if (energies[i]! > best) {
        best = energies[i]!;
      }
    }
    scores[end - windowLen + 1] = best;
  }
  return scores;
}
