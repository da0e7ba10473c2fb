/**
 * Reconstruction-loss oracles over flattened (maskedCount, dim) arrays:
 * mean over masked tokens of the squared Euclidean distance, no division by
 * the vector dimension. Mirrors the native oracle; parity is pinned by the
 * golden-set tests.
 */

export function featureLoss(
  targets: ArrayLike<number>,
  predictions: ArrayLike<number>,
  maskedCount: number,
): number {
  if (maskedCount < 1 || !Number.isInteger(maskedCount)) {
    throw new RangeError(`maskedCount must be a positive integer, got ${maskedCount}`);
  }
  if (targets.length !== predictions.length) {
    throw new RangeError(
      `targets (${targets.length}) and predictions (${predictions.length}) differ in length`,
    );
  }
  if (targets.length % maskedCount !== 0) {
    throw new RangeError(`length ${targets.length} is not a multiple of maskedCount ${maskedCount}`);
  }
  let total = 0;
  for (let i = 0; i < targets.length; i++) {
    const t = targets[i];
    const p = predictions[i];
    if (!Number.isFinite(t) || !Number.isFinite(p)) {
      throw new RangeError(`non-finite value at index ${i}`);
    }
    const diff = t - p;
    total += diff * diff;
  }
  return total / maskedCount;
}

export const pixelLoss = featureLoss;
