/**
 * Emit the evaluator's wire formats: a version-1 model document
 * (dense 90->1 with magnitudes, then batchnorm; the final sign is
 * implicit in sign_bits mode), input documents, and a metrics summary.
 */

import { TrainedModel, binarizedWeights } from "./bnn";
import { BinEdges } from "./dataset";

/** Reals travel as decimal strings in the wire format. */
export function realStr(v: number): string {
  return String(v);
}

export interface ModelDocument {
  version: number;
  input_shape: number;
  output_mode: string;
  layers: object[];
}

export function toModelDocument(model: TrainedModel): ModelDocument {
  return {
    version: 1,
    input_shape: model.latent.length,
    output_mode: "sign_bits",
    layers: [
      {
        type: "dense",
        weights: [binarizedWeights(model)],
        bias: [0],
        magnitudes: [model.latent.map((w) => realStr(Math.abs(w)))],
      },
      {
        type: "batchnorm",
        gamma: [realStr(model.gamma)],
        beta: [realStr(model.beta)],
        mu: [realStr(model.mu)],
        sigma2: [realStr(model.sigma2)],
        epsilon: realStr(model.epsilon),
      },
    ],
  };
}

export function toInputDocument(x: number[]): object {
  return { version: 1, encoding: "pm1", values: x };
}

export interface Metrics {
  seed: number;
  trainRows: number;
  testRows: number;
  trainAccuracy: number;
  testAccuracy: number;
}

export function toMetricsDocument(metrics: Metrics, edges: BinEdges): object {
  return {
    version: 1,
    task: "cancer",
    seed: metrics.seed,
    rows: { train: metrics.trainRows, test: metrics.testRows },
    accuracy: { train: metrics.trainAccuracy, test: metrics.testAccuracy },
    bin_cuts: edges.cuts.map(([a, b]) => [realStr(a), realStr(b)]),
    label_convention: "+1 = malignant, -1 = benign",
  };
}

export function toJson(doc: object): string {
  return JSON.stringify(doc, null, 2) + "\n";
}
