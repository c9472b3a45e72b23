import { spawnSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, test } from "vitest";

import { cocoJson } from "../src/dataset.js";
import { warpImage } from "../src/fisheye.js";
import { encodePng, RawImage } from "../src/png.js";

function gradient(side: number): RawImage {
  const data = new Uint8Array(side * side * 3);
  for (let y = 0; y < side; y++) {
    for (let x = 0; x < side; x++) {
      const i = (y * side + x) * 3;
      data[i] = (x * 11) & 0xff;
      data[i + 1] = (y * 17) & 0xff;
      data[i + 2] = (x + y * 3) & 0xff;
    }
  }
  return { width: side, height: side, channels: 3, data };
}

const SRC = gradient(48);
const F = 40;
const QC: [number, number] = [23.5, 23.5];
const OUT = 40;
const TRIANGLE: [number, number][] = [[24, 24], [30, 24], [24, 32]];

/** The same augment invocation the binding makes, spawned by hand. */
function referenceRun() {
  const dir = mkdtempSync(join(tmpdir(), "omnibox-ref-"));
  const imagesDir = join(dir, "images");
  const outDir = join(dir, "out");
  mkdirSync(imagesDir);
  writeFileSync(join(imagesDir, "image.png"), encodePng(SRC));
  writeFileSync(join(dir, "coco.json"), cocoJson(48, 48, [TRIANGLE]));
  const proc = spawnSync(
    "omnibox",
    [
      "augment",
      "--coco", join(dir, "coco.json"),
      "--images", imagesDir,
      "--out", outDir,
      "--rotation-range", "0,0",
      "--fixed-f", String(F),
      "--fixed-qc", `${QC[0]},${QC[1]}`,
      "--out-size", String(OUT),
      "--seed", "0",
      "--write-masks",
      "--dump-segments",
    ],
    { encoding: "utf-8" },
  );
  expect(proc.status).toBe(0);
  return {
    dir,
    imagePng: readFileSync(join(outDir, "image.png")),
    maskPng: readFileSync(join(outDir, "image_mask.png")),
    segments: JSON.parse(readFileSync(join(outDir, "segments.json"), "utf-8")),
  };
}

const reference = referenceRun();
const result = warpImage(SRC, F, QC, OUT);

afterAll(() => rmSync(reference.dir, { recursive: true, force: true }));

describe("warpImage parity with the CLI", () => {
  test("warped frame is byte-identical", () => {
    expect(Buffer.from(result.imagePng).equals(reference.imagePng)).toBe(true);
  });

  test("validity mask is byte-identical", () => {
    expect(Buffer.from(result.maskPng).equals(reference.maskPng)).toBe(true);
  });

  test("decoded outputs have the declared shape", () => {
    expect([result.image.width, result.image.height, result.image.channels])
      .toEqual([OUT, OUT, 3]);
    expect(result.mask.length).toBe(OUT * OUT);
    for (const v of result.mask) expect(v === 0 || v === 1).toBe(true);
    expect(result.mask.some((v) => v === 1)).toBe(true);
  });

  test("vertex mapping equals the CLI's segment dump", () => {
    const mapped = result.mapVertices(TRIANGLE);
    expect(mapped).toEqual(reference.segments.images[0].instances[0][0]);
    expect(mapped.length).toBe(3);
  });
});

describe("warpImage semantics", () => {
  test("a short focal length leaves invalid corners", () => {
    const wide = warpImage(SRC, 20, QC, OUT);
    expect(wide.mask[0]).toBe(0); // top-left ray lands outside the source
    expect(wide.mask[(OUT / 2) * OUT + OUT / 2]).toBe(1);
  });

  test("rejects non-RGB input", () => {
    const grey: RawImage = {
      width: 4, height: 4, channels: 1, data: new Uint8Array(16),
    };
    expect(() => warpImage(grey, F, QC, OUT)).toThrow(/RGB/);
  });

  test("rejects degenerate vertex lists", () => {
    expect(() => result.mapVertices([[1, 1], [2, 2]])).toThrow(/at least 3/);
  });
});
