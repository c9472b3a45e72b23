import { writeFileSync } from "node:fs";
import { join } from "node:path";

import { datasetJson, ImageEntry } from "./dataset.js";
import { runCli, withTempDir } from "./run.js";

export interface LossWeights {
  lambdaC?: number;
  lambdaB?: number;
  lambdaU?: number;
  lambdaA?: number;
}

export interface LossReport {
  weights: { lambda_c: number; lambda_b: number; lambda_u: number; lambda_a: number };
  aggregate: Record<string, number>;
  images: Record<string, any>;
  skipped_zero_gt: number;
  clamped_normalized_centers: number;
}

export interface EvalOptions {
  strata?: "distance" | "angle";
  rotateInterval?: number;
  distanceBins?: number;
  angleBinDeg?: number;
  interpolation?: "101" | "all";
}

export interface ApReport {
  ap: number | null;
  ap50: number | null;
  ap75: number | null;
  [key: string]: any;
}

function withPair<T>(
  gt: ImageEntry[],
  pred: ImageEntry[],
  fn: (gtPath: string, predPath: string) => T,
): T {
  return withTempDir((dir) => {
    const gtPath = join(dir, "gt.json");
    const predPath = join(dir, "pred.json");
    writeFileSync(gtPath, datasetJson(gt));
    writeFileSync(predPath, datasetJson(pred));
    return fn(gtPath, predPath);
  });
}

/** Hungarian-matched training loss breakdown (CLI `match-loss`). */
export function computeLoss(
  gt: ImageEntry[],
  pred: ImageEntry[],
  weights: LossWeights = {},
): LossReport {
  return withPair(gt, pred, (gtPath, predPath) => {
    const args = ["match-loss", "--gt", gtPath, "--pred", predPath];
    if (weights.lambdaC !== undefined) args.push("--lambda-c", String(weights.lambdaC));
    if (weights.lambdaB !== undefined) args.push("--lambda-b", String(weights.lambdaB));
    if (weights.lambdaU !== undefined) args.push("--lambda-u", String(weights.lambdaU));
    if (weights.lambdaA !== undefined) args.push("--lambda-a", String(weights.lambdaA));
    return runCli(args) as LossReport;
  });
}

/** Rotated-box AP report (CLI `evaluate`). */
export function cocoAp(
  gt: ImageEntry[],
  pred: ImageEntry[],
  opts: EvalOptions = {},
): ApReport {
  return withPair(gt, pred, (gtPath, predPath) => {
    const args = ["evaluate", "--gt", gtPath, "--pred", predPath];
    if (opts.strata) args.push("--strata", opts.strata);
    if (opts.rotateInterval !== undefined) {
      args.push("--rotate-interval", String(opts.rotateInterval));
    }
    if (opts.distanceBins !== undefined) {
      args.push("--distance-bins", String(opts.distanceBins));
    }
    if (opts.angleBinDeg !== undefined) {
      args.push("--angle-bin-deg", String(opts.angleBinDeg));
    }
    if (opts.interpolation) args.push("--interpolation", opts.interpolation);
    return runCli(args) as ApReport;
  });
}
