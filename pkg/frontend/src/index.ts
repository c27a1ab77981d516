export { APPROX_HEADER, CsvError, parseApproxCsv, parseSweepCsv, SWEEP_HEADER } from "./csv.js";
export type { ApproxRow, SweepRow } from "./csv.js";
export { depthSeries, groupBy, mean, orderKey, sampleStd, sortSeries } from "./aggregate.js";
export type { Series, SeriesPoint } from "./aggregate.js";
export { curvePanel, histogramPanel, linePanel, niceTicks, scatterPanel } from "./svg.js";
export {
  approxDiagnostics,
  correlationLevels,
  depthByVariance,
  FAMILIES,
  magnitudeScaling,
  pruningScaling,
  renderSweepFamily,
} from "./families.js";
export type { Family, FamilyResult, RenderedPanel } from "./families.js";
export { main } from "./cli.js";
