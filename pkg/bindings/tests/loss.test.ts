import { describe, expect, it } from "vitest";
import { featureLoss, pixelLoss } from "../src/loss.js";

describe("featureLoss", () => {
  it("returns 1.0 for the hand case: targets (1,0),(0,1) vs zero predictions", () => {
    const targets = Float32Array.from([1, 0, 0, 1]);
    const predictions = new Float32Array(4);
    expect(featureLoss(targets, predictions, 2)).toBe(1.0);
  });

  it("is zero when predictions equal targets", () => {
    const targets = Float32Array.from([0.25, -3, 7, 0.5, 2, 1]);
    expect(featureLoss(targets, targets, 3)).toBe(0);
  });

  it("scales quadratically with the residual", () => {
    const targets = Float32Array.from([1, 2, 3, 4]);
    const zeros = new Float32Array(4);
    const base = featureLoss(targets, zeros, 2);
    const scaled = featureLoss(targets.map((v) => 3 * v), zeros, 2);
    expect(scaled).toBeCloseTo(9 * base, 10);
  });

  it("evaluates the pixel hand case: 1536 dims of 0.5 vs zeros -> 384", () => {
    const targets = new Float32Array(1536).fill(0.5);
    expect(pixelLoss(targets, new Float32Array(1536), 1)).toBe(384);
  });

  it("rejects mismatched lengths and non-finite values", () => {
    expect(() => featureLoss(new Float32Array(4), new Float32Array(3), 2)).toThrow(RangeError);
    expect(() => featureLoss(new Float32Array(3), new Float32Array(3), 2)).toThrow(RangeError);
    expect(() => featureLoss([NaN, 0], [0, 0], 1)).toThrow(RangeError);
    expect(() => featureLoss([1, 0], [0, 0], 0)).toThrow(RangeError);
  });
});
