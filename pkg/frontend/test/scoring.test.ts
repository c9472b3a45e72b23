import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, test } from "vitest";

import { datasetJson, ImageEntry } from "../src/dataset.js";
import { cocoAp, computeLoss } from "../src/scoring.js";

const GT: ImageEntry[] = [
  {
    id: 1,
    width: 100,
    height: 100,
    boxes: [
      { cx: 30, cy: 30, w: 10, h: 20, angleDeg: 15 },
      { cx: 70, cy: 60, w: 8, h: 16, angleDeg: -30 },
    ],
  },
];

function scored(entries: ImageEntry[], score: number): ImageEntry[] {
  return entries.map((img) => ({
    ...img,
    boxes: img.boxes.map((b) => ({ ...b, score })),
  }));
}

/** Spawn the subcommand by hand on files serialized the same way. */
function referenceReport(
  subcommand: string,
  gt: ImageEntry[],
  pred: ImageEntry[],
  extra: string[] = [],
): any {
  const dir = mkdtempSync(join(tmpdir(), "omnibox-ref-"));
  try {
    writeFileSync(join(dir, "gt.json"), datasetJson(gt));
    writeFileSync(join(dir, "pred.json"), datasetJson(pred));
    const proc = spawnSync(
      "omnibox",
      [subcommand, "--gt", join(dir, "gt.json"), "--pred", join(dir, "pred.json"), ...extra],
      { encoding: "utf-8" },
    );
    expect(proc.status).toBe(0);
    return JSON.parse(proc.stdout);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

describe("computeLoss", () => {
  test("perfect predictions score ~0 and match the CLI field-for-field", () => {
    const pred = scored(GT, 1.0);
    const report = computeLoss(GT, pred);
    expect(report.aggregate.total).toBeLessThanOrEqual(1e-6);
    expect(report.weights).toEqual({
      lambda_c: 2.0, lambda_b: 5.0, lambda_u: 2.0, lambda_a: 0.1,
    });
    expect(report).toEqual(referenceReport("match-loss", GT, pred));
  });

  test("custom weights are forwarded", () => {
    const pred = scored(GT, 0.8);
    const report = computeLoss(GT, pred, { lambdaB: 1, lambdaA: 0 });
    expect(report.weights.lambda_b).toBe(1.0);
    expect(report.weights.lambda_a).toBe(0.0);
    expect(report).toEqual(
      referenceReport("match-loss", GT, pred, ["--lambda-b", "1", "--lambda-a", "0"]),
    );
  });

  test("surfaces the CLI error for mismatched image ids", () => {
    const pred = scored(GT, 0.9).map((img) => ({ ...img, id: 2 }));
    expect(() => computeLoss(GT, pred)).toThrow(/only in GT/);
  });

  test("surfaces the CLI error for unscored predictions", () => {
    expect(() => computeLoss(GT, GT)).toThrow(/scores/);
  });
});

describe("cocoAp", () => {
  test("ground truth as predictions is a perfect run", () => {
    const pred = scored(GT, 0.9);
    const report = cocoAp(GT, pred);
    expect(report.ap).toBe(1.0);
    expect(report.ap50).toBe(1.0);
    expect(report.ap75).toBe(1.0);
    expect(report).toEqual(referenceReport("evaluate", GT, pred));
  });

  test("distance strata are exposed and match the CLI", () => {
    const pred = scored(GT, 0.9);
    const opts = { strata: "distance" as const, rotateInterval: 45, distanceBins: 4 };
    const report = cocoAp(GT, pred, opts);
    expect(report.distance_bins).toHaveLength(4);
    expect(report).toEqual(
      referenceReport("evaluate", GT, pred, [
        "--strata", "distance", "--rotate-interval", "45", "--distance-bins", "4",
      ]),
    );
  });

  test("missed boxes lower AP below 1", () => {
    const pred = scored(GT, 0.9).map((img) => ({
      ...img,
      boxes: img.boxes.slice(0, 1),
    }));
    const report = cocoAp(GT, pred);
    expect(report.ap50).toBeLessThan(1.0);
    expect(report.ap50).toBeGreaterThan(0.0);
  });
});
