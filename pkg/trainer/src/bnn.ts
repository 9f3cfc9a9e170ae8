/**
 * Binarized 90->1 network with batch normalization, trained with the
 * straight-through estimator: the forward pass uses sign(w) so training
 * sees exactly the integer pre-activations inference will see, while
 * gradients flow to the real-valued latent weights as if sign were the
 * identity. Latent weights double as the exported magnitudes.
 */

import { Rng, gaussian, mulberry32, shuffle } from "./rng";

export interface TrainConfig {
  seed: number;
  epochs: number;
  /** Epochs at the start that use the real-valued latent weights in the
   * forward pass before binarization kicks in. */
  warmupEpochs: number;
  learningRate: number;
  batchSize: number;
  bnMomentum: number;
}

export const DEFAULT_CONFIG: TrainConfig = {
  seed: 7,
  epochs: 300,
  warmupEpochs: 100,
  learningRate: 0.05,
  batchSize: 32,
  bnMomentum: 0.9,
};

export interface TrainedModel {
  latent: number[]; // real-valued weights, |latent| exported as magnitudes
  gamma: number;
  beta: number;
  mu: number; // running mean of the integer pre-activation
  sigma2: number; // running variance
  epsilon: number;
}

export function binarizedWeights(model: TrainedModel): number[] {
  // sign(0) = +1, matching the evaluator
  return model.latent.map((w) => (w >= 0 ? 1 : -1));
}

/** Integer pre-activation sign(w).x; exact in doubles for d <= 2^52. */
export function preActivation(latent: number[], x: number[]): number {
  let z = 0;
  for (let i = 0; i < latent.length; i++) z += (latent[i] >= 0 ? 1 : -1) * x[i];
  return z;
}

/** The exported model's forward pass: +1 iff the normalized
 * pre-activation is non-negative. Must agree with the evaluator's
 * folded integer threshold on every input. */
export function forwardSign(model: TrainedModel, x: number[]): number {
  const z = preActivation(model.latent, x);
  const h = (model.gamma * (z - model.mu)) / Math.sqrt(model.sigma2 + model.epsilon) + model.beta;
  return h >= 0 ? 1 : -1;
}

export function accuracy(model: TrainedModel, xs: number[][], ys: number[]): number {
  let hits = 0;
  for (let i = 0; i < xs.length; i++) {
    if (forwardSign(model, xs[i]) === ys[i]) hits++;
  }
  return hits / xs.length;
}

function sigmoid(v: number): number {
  return 1 / (1 + Math.exp(-v));
}

/**
 * Train on +-1 features and +-1 labels. Batch statistics normalize the
 * integer pre-activations during training; running statistics are what
 * the exported model carries.
 */
export function trainBnn(xs: number[][], ys: number[], config: Partial<TrainConfig> = {}): TrainedModel {
  const cfg = { ...DEFAULT_CONFIG, ...config };
  const d = xs[0].length;
  const rng: Rng = mulberry32(cfg.seed);
  const latent = Array.from({ length: d }, () => 0.1 * gaussian(rng));
  let gamma = 1;
  let beta = 0;
  let mu = 0;
  let sigma2 = 1;
  let statsPrimed = false;

  const realPreActivation = (x: number[]) => {
    let z = 0;
    for (let i = 0; i < latent.length; i++) z += latent[i] * x[i];
    return z;
  };

  const indices = Array.from({ length: xs.length }, (_, i) => i);
  for (let epoch = 0; epoch < cfg.epochs; epoch++) {
    const binary = epoch >= cfg.warmupEpochs;
    shuffle(indices, rng);
    for (let start = 0; start < indices.length; start += cfg.batchSize) {
      const batch = indices.slice(start, start + cfg.batchSize);
      if (batch.length < 2) continue; // variance needs at least two rows

      const zs = batch.map((i) => (binary ? preActivation(latent, xs[i]) : realPreActivation(xs[i])));
      const batchMu = zs.reduce((a, b) => a + b, 0) / zs.length;
      const batchVar = zs.reduce((a, z) => a + (z - batchMu) ** 2, 0) / zs.length;
      const spread = Math.sqrt(batchVar + 1e-5);

      if (!statsPrimed) {
        mu = batchMu;
        sigma2 = batchVar;
        statsPrimed = true;
      } else {
        mu = cfg.bnMomentum * mu + (1 - cfg.bnMomentum) * batchMu;
        sigma2 = cfg.bnMomentum * sigma2 + (1 - cfg.bnMomentum) * batchVar;
      }

      let gradGamma = 0;
      let gradBeta = 0;
      const gradLatent = new Array(d).fill(0);
      for (let bi = 0; bi < batch.length; bi++) {
        const row = xs[batch[bi]];
        const target = ys[batch[bi]] === 1 ? 1 : 0;
        const zHat = (zs[bi] - batchMu) / spread;
        const p = sigmoid(gamma * zHat + beta);
        const err = p - target; // d(BCE)/d(logit)
        gradGamma += err * zHat;
        gradBeta += err;
        // straight-through: d(logit)/dz = gamma / spread, dz/dw = x
        const coeff = (err * gamma) / spread;
        for (let f = 0; f < d; f++) gradLatent[f] += coeff * row[f];
      }
      const scale = cfg.learningRate / batch.length;
      gamma -= scale * gradGamma;
      beta -= scale * gradBeta;
      for (let f = 0; f < d; f++) {
        latent[f] -= scale * gradLatent[f];
        // keep latents in the binarization range, standard BNN clipping
        latent[f] = Math.max(-1, Math.min(1, latent[f]));
      }
    }
  }

  // calibration pass: export exact whole-set statistics for the final
  // weights rather than the momentum-lagged running averages
  const zs = xs.map((x) => preActivation(latent, x));
  mu = zs.reduce((a, b) => a + b, 0) / zs.length;
  sigma2 = zs.reduce((a, z) => a + (z - mu) ** 2, 0) / zs.length;

  return { latent, gamma, beta, mu, sigma2, epsilon: 1e-5 };
}
