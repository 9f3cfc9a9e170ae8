/**
 * Train the Cancer binarized network and export it for the evaluator:
 *
 *   node dist/main.js [--data data/cancer.csv] [--out out] [--seed 7]
 *
 * Writes out/model.json (evaluator wire format) and out/metrics.json.
 */

import * as fs from "fs";
import * as path from "path";
import { accuracy, trainBnn } from "./bnn";
import { binFeatures, computeBinEdges, loadCsv, toSignedLabels, trainTestSplit } from "./dataset";
import { toJson, toMetricsDocument, toModelDocument } from "./export";
import { mulberry32 } from "./rng";

function argValue(flag: string, fallback: string): string {
  const i = process.argv.indexOf(flag);
  return i >= 0 && i + 1 < process.argv.length ? process.argv[i + 1] : fallback;
}

export function runPipeline(dataPath: string, seed: number) {
  const raw = loadCsv(dataPath);
  const split = trainTestSplit(raw.rows.length, 0.7, mulberry32(seed));
  const trainRows = split.train.map((i) => raw.rows[i]);
  const testRows = split.test.map((i) => raw.rows[i]);
  const edges = computeBinEdges(trainRows);
  const xTrain = binFeatures(trainRows, edges);
  const xTest = binFeatures(testRows, edges);
  const yTrain = toSignedLabels(split.train.map((i) => raw.labels[i]));
  const yTest = toSignedLabels(split.test.map((i) => raw.labels[i]));

  const model = trainBnn(xTrain, yTrain, { seed });
  return {
    model,
    edges,
    xTrain,
    xTest,
    yTrain,
    yTest,
    trainAccuracy: accuracy(model, xTrain, yTrain),
    testAccuracy: accuracy(model, xTest, yTest),
  };
}

function main() {
  const dataPath = argValue("--data", path.join(__dirname, "..", "data", "cancer.csv"));
  const outDir = argValue("--out", path.join(__dirname, "..", "out"));
  const seed = Number(argValue("--seed", "7"));

  const result = runPipeline(dataPath, seed);
  fs.mkdirSync(outDir, { recursive: true });
  fs.writeFileSync(path.join(outDir, "model.json"), toJson(toModelDocument(result.model)));
  const metrics = toMetricsDocument(
    {
      seed,
      trainRows: result.xTrain.length,
      testRows: result.xTest.length,
      trainAccuracy: result.trainAccuracy,
      testAccuracy: result.testAccuracy,
    },
    result.edges
  );
  fs.writeFileSync(path.join(outDir, "metrics.json"), toJson(metrics));
  console.log(
    `trained on ${result.xTrain.length} rows, ` +
      `train acc ${result.trainAccuracy.toFixed(4)}, test acc ${result.testAccuracy.toFixed(4)}`
  );
  console.log(`model document: ${path.join(outDir, "model.json")}`);
}

if (require.main === module) {
  main();
}
