import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { cocoJson } from "./dataset.js";
import { decodePng, encodePng, RawImage } from "./png.js";
import { runCli, withTempDir } from "./run.js";

export interface WarpResult {
  /** Warped RGB frame (outSize x outSize). */
  image: RawImage;
  /** Per-pixel validity, 0 or 1, row-major outSize*outSize. */
  mask: Uint8Array;
  /** The exact PNG bytes the CLI wrote (byte-identity checks). */
  imagePng: Uint8Array;
  maskPng: Uint8Array;
  /**
   * Map source-image polygon vertices (>= 3) to output-pixel positions.
   * Vertices whose ray leaves the hemisphere or lands outside the output
   * canvas are dropped, so the result can be shorter than the input.
   */
  mapVertices(vertices: [number, number][]): [number, number][];
}

function runAugment(
  dir: string,
  src: RawImage,
  f: number,
  qc: [number, number],
  outSize: number,
  polygons: [number, number][][],
): string {
  const imagesDir = join(dir, "images");
  const outDir = join(dir, "out");
  mkdirSync(imagesDir, { recursive: true });
  writeFileSync(join(imagesDir, "image.png"), encodePng(src));
  // ingestion keeps only images that carry an instance; the warped pixels
  // don't depend on annotations, so a pure warp gets a placeholder triangle
  const effective = polygons.length
    ? polygons
    : [[[0, 0], [1, 0], [0, 1]] as [number, number][]];
  writeFileSync(
    join(dir, "coco.json"),
    cocoJson(src.width, src.height, effective),
  );
  runCli([
    "augment",
    "--coco", join(dir, "coco.json"),
    "--images", imagesDir,
    "--out", outDir,
    "--rotation-range", "0,0",
    "--fixed-f", String(f),
    "--fixed-qc", `${qc[0]},${qc[1]}`,
    "--out-size", String(outSize),
    "--seed", "0",
    "--write-masks",
    "--dump-segments",
  ]);
  return outDir;
}

/**
 * Equidistant fisheye warp of an RGB image through the CLI.
 *
 * f is the focal length in pixels, qc the optical-axis position in source
 * pixel coordinates, outSize the square output canvas side.
 */
export function warpImage(
  src: RawImage,
  f: number,
  qc: [number, number],
  outSize: number,
): WarpResult {
  if (src.channels !== 3) {
    throw new Error(`warpImage needs an RGB image, got ${src.channels} channels`);
  }
  const { imagePng, maskPng } = withTempDir((dir) => {
    const outDir = runAugment(dir, src, f, qc, outSize, []);
    return {
      imagePng: new Uint8Array(readFileSync(join(outDir, "image.png"))),
      maskPng: new Uint8Array(readFileSync(join(outDir, "image_mask.png"))),
    };
  });
  const image = decodePng(imagePng);
  const maskImage = decodePng(maskPng);
  const mask = new Uint8Array(maskImage.data.length);
  for (let i = 0; i < mask.length; i++) {
    mask[i] = maskImage.data[i] ? 1 : 0;
  }

  const mapVertices = (vertices: [number, number][]): [number, number][] => {
    if (vertices.length < 3) {
      throw new Error("vertex mapping needs a polygon of at least 3 vertices");
    }
    return withTempDir((dir) => {
      const outDir = runAugment(dir, src, f, qc, outSize, [vertices]);
      const segments = JSON.parse(
        readFileSync(join(outDir, "segments.json"), "utf-8"),
      );
      const instances = segments.images[0]?.instances ?? [];
      if (!instances.length) {
        throw new Error("all vertices mapped outside the output canvas");
      }
      return instances[0][0] as [number, number][];
    });
  };

  return { image, mask, imagePng, maskPng, mapVertices };
}
