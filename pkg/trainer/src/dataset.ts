/**
 * Cancer dataset loading, train/test splitting, and the binning
 * featurization: each real feature's training-split range is cut into
 * three equal-width bins and one-hot encoded, turning 30 features into
 * a 90-dimensional +-1 vector.
 */

import * as fs from "fs";
import { Rng, shuffle } from "./rng";

export interface RawDataset {
  featureNames: string[];
  rows: number[][]; // n x 30 real values
  labels: number[]; // 1 = malignant, 0 = benign
}

export interface BinEdges {
  /** Per original feature: the two interior cut points. */
  cuts: Array<[number, number]>;
}

export interface BinnedDataset {
  features: number[][]; // n x 90 in {-1, +1}, one hot bin per feature
  labels: number[]; // +1 = malignant, -1 = benign
  edges: BinEdges;
}

export function loadCsv(path: string): RawDataset {
  const lines = fs.readFileSync(path, "utf8").trim().split("\n");
  const header = lines[0].split(",");
  const featureNames = header.slice(0, -1);
  const rows: number[][] = [];
  const labels: number[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(`bad row width ${cells.length}, expected ${header.length}`);
    }
    rows.push(cells.slice(0, -1).map(Number));
    labels.push(Number(cells[cells.length - 1]));
  }
  return { featureNames, rows, labels };
}

/** Seeded index split; ratio is the training share (e.g. 0.7). */
export function trainTestSplit(n: number, ratio: number, rng: Rng): { train: number[]; test: number[] } {
  const order = shuffle(Array.from({ length: n }, (_, i) => i), rng);
  const cut = Math.round(n * ratio);
  return { train: order.slice(0, cut), test: order.slice(cut) };
}

/** Equal-width cut points from the training rows only. */
export function computeBinEdges(trainRows: number[][]): BinEdges {
  const d = trainRows[0].length;
  const cuts: Array<[number, number]> = [];
  for (let f = 0; f < d; f++) {
    let lo = Infinity;
    let hi = -Infinity;
    for (const row of trainRows) {
      lo = Math.min(lo, row[f]);
      hi = Math.max(hi, row[f]);
    }
    const step = (hi - lo) / 3;
    // constant feature: both cuts collapse to the value, so every row
    // lands in the first (degenerate) bin
    cuts.push([lo + step, lo + 2 * step]);
  }
  return { cuts };
}

/** Bin index with boundary values assigned to the lower bin; values
 * outside the training range clamp to the edge bins. */
export function binIndex(value: number, cut: [number, number]): number {
  if (value <= cut[0]) return 0;
  if (value <= cut[1]) return 1;
  return 2;
}

/** One-hot encode every feature by bin membership, as +-1 bits. */
export function binFeatures(rows: number[][], edges: BinEdges): number[][] {
  return rows.map((row) => {
    const out: number[] = [];
    for (let f = 0; f < row.length; f++) {
      const hot = binIndex(row[f], edges.cuts[f]);
      for (let b = 0; b < 3; b++) out.push(b === hot ? 1 : -1);
    }
    return out;
  });
}

export function toSignedLabels(labels: number[]): number[] {
  return labels.map((y) => (y === 1 ? 1 : -1));
}
