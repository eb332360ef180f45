export { Graph, Var } from "./autodiff.js";
export { Adam, learningRate } from "./adam.js";
export {
  addAwgn,
  addSaltPepper,
  augmentPair,
  degradeClip,
  makeCleanClip,
  makeDataset,
  parseManifest,
} from "./data.js";
export type { ClipPair, ClipSpec, DegradeSpec } from "./data.js";
export { exportWeights, loadModel, readTensor, readWeights, writeTensor } from "./evrw.js";
export { gradCheck } from "./gradcheck.js";
export { DEFAULT_CONFIG, LATENT_CHANNELS, Model, Param, SE_REDUCTION, validateConfig } from "./model.js";
export type { CuVariant, NetworkConfig } from "./model.js";
export { counterGaussian, counterU32, counterUniform, Rng, STREAM_AWGN, STREAM_SNP } from "./rng.js";
export { clip01, maxAbsDiff, mse, psnr, Tensor } from "./tensor.js";
export type { Shape } from "./tensor.js";
export { evaluateHeldOut, trainToy, TOY_CLIP, TOY_CONFIG, TOY_DEGRADE } from "./train.js";
