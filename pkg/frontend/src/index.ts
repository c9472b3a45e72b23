export { generateBox, RotatedBox } from "./boxgen.js";
export { warpImage, WarpResult } from "./fisheye.js";
export { computeLoss, cocoAp, LossWeights, LossReport, EvalOptions, ApReport } from "./scoring.js";
export { decodePng, encodePng, RawImage } from "./png.js";
export { BoxRow, ImageEntry, datasetJson, parseDataset } from "./dataset.js";
export { cliBinary, runCli, withTempDir } from "./run.js";
