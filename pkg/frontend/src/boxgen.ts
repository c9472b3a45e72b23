import { writeFileSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { cocoJson, parseDataset } from "./dataset.js";
import { runCli, withTempDir } from "./run.js";

export interface RotatedBox {
  cx: number;
  cy: number;
  w: number;
  h: number;
  /** Radians, canonical: h >= w and theta in [-pi/2, pi/2). */
  theta: number;
}

/**
 * Fit the minimum-area rotated box to a set of segmentation polygons.
 *
 * Vertices are pixel coordinates in an imageWidth x imageHeight frame.
 * Degenerate fits (under 1 px^2) are returned, not dropped.
 */
export function generateBox(
  polygons: [number, number][][],
  imageWidth: number,
  imageHeight: number,
): RotatedBox {
  if (!polygons.length || polygons.every((p) => p.length === 0)) {
    throw new Error("instance has no polygon vertices");
  }
  return withTempDir((dir) => {
    const cocoPath = join(dir, "coco.json");
    const outPath = join(dir, "boxes.json");
    writeFileSync(cocoPath, cocoJson(imageWidth, imageHeight, polygons));
    runCli([
      "gen-boxes",
      "--coco", cocoPath,
      "--out", outPath,
      "--keep-degenerate",
      "--min-visibility", "0",
    ]);
    const images = parseDataset(readFileSync(outPath, "utf-8"));
    const box = images[0]?.boxes[0];
    if (!box) {
      throw new Error("no box generated (vertices rejected at ingestion)");
    }
    return {
      cx: box.cx,
      cy: box.cy,
      w: box.w,
      h: box.h,
      theta: (box.angleDeg * Math.PI) / 180,
    };
  });
}
