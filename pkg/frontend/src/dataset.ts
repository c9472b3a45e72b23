/**
 * The CLI's rotated-box dataset format ("internal-json"): pixels on disk,
 * degrees for angles, 6-decimal rounding. These helpers serialize the
 * structures the bound operations exchange with it.
 */

export interface BoxRow {
  cx: number;
  cy: number;
  w: number;
  h: number;
  angleDeg: number;
  /** Present on every box of a prediction file, absent for ground truth. */
  score?: number;
}

export interface ImageEntry {
  id: number | string;
  file?: string;
  width: number;
  height: number;
  boxes: BoxRow[];
}

export function datasetJson(images: ImageEntry[]): string {
  const doc = {
    meta: {},
    images: images.map((img) => ({
      id: img.id,
      file: img.file ?? `${img.id}.png`,
      width: img.width,
      height: img.height,
      boxes: img.boxes.map((b) => {
        const row: Record<string, number> = {
          cx: b.cx,
          cy: b.cy,
          w: b.w,
          h: b.h,
          angle_deg: b.angleDeg,
        };
        if (b.score !== undefined) row.score = b.score;
        return row;
      }),
    })),
  };
  return JSON.stringify(doc, null, 2) + "\n";
}

export function parseDataset(text: string): ImageEntry[] {
  const doc = JSON.parse(text);
  return doc.images.map((img: any) => ({
    id: img.id,
    file: img.file,
    width: img.width,
    height: img.height,
    boxes: img.boxes.map((b: any) => {
      const row: BoxRow = {
        cx: b.cx,
        cy: b.cy,
        w: b.w,
        h: b.h,
        angleDeg: b.angle_deg,
      };
      if (b.score !== undefined) row.score = b.score;
      return row;
    }),
  }));
}

/** COCO instance-annotation document for a single image. */
export function cocoJson(
  width: number,
  height: number,
  polygons: [number, number][][],
  file = "image.png",
): string {
  return JSON.stringify({
    images: [{ id: 1, file_name: file, width, height }],
    annotations: polygons.length
      ? [
          {
            id: 1,
            image_id: 1,
            category_id: 1,
            iscrowd: 0,
            segmentation: polygons.map((poly) => poly.flat()),
          },
        ]
      : [],
    categories: [{ id: 1, name: "person" }],
  });
}
