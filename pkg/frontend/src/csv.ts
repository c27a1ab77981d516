import Papa from "papaparse";

export const SWEEP_HEADER = [
  "experiment_id", "kind", "seed", "n", "L", "sigma_w2", "method", "sparsity",
  "scaling_mode", "scale_value", "eta", "k", "log_jac_norm", "converged", "wall_time_ms",
] as const;

export const APPROX_HEADER = [
  "experiment_id", "kind", "replicate", "n", "L", "layer", "statistic", "value",
] as const;

export class CsvError extends Error {}

export interface SweepRow {
  experimentId: string;
  kind: string;
  seed: number;
  n: number;
  L: number;
  /** raw column text; exact grouping key, no float round-trip */
  sigmaW2: string;
  method: string;
  sparsity: string;
  scalingMode: string;
  scaleValue: number | null;
  eta: string;
  k: number;
  /** -Infinity when the product is exactly zero ("neg_inf") */
  logJacNorm: number;
  converged: boolean;
}

export interface ApproxRow {
  experimentId: string;
  kind: string;
  replicate: string;
  n: number;
  L: number;
  layer: number;
  statistic: string;
  value: number;
}

function checkHeader(fields: string[] | undefined, expected: readonly string[], file: string): void {
  if (!fields || fields.length === 0) {
    throw new CsvError(`${file}: no header row`);
  }
  const upto = Math.max(fields.length, expected.length);
  for (let i = 0; i < upto; i++) {
    if (fields[i] !== expected[i]) {
      const found = fields[i] === undefined ? "nothing" : `'${fields[i]}'`;
      const want = expected[i] === undefined ? "nothing" : `'${expected[i]}'`;
      throw new CsvError(`${file}: header column ${i + 1}: expected ${want}, found ${found}`);
    }
  }
}

function parseRecords(text: string, expected: readonly string[], file: string): Record<string, string>[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  checkHeader(parsed.meta.fields, expected, file);
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0]!;
    throw new CsvError(`${file}: row ${e.row}: ${e.message}`);
  }
  return parsed.data;
}

function num(rec: Record<string, string>, field: string, file: string): number {
  const text = rec[field] ?? "";
  const v = Number(text);
  if (text === "" || !Number.isFinite(v)) {
    throw new CsvError(`${file}: bad numeric value '${text}' in column '${field}'`);
  }
  return v;
}

export function parseSweepCsv(text: string, file: string): SweepRow[] {
  return parseRecords(text, SWEEP_HEADER, file).map((rec) => {
    const rawNorm = rec["log_jac_norm"] ?? "";
    const rawScale = rec["scale_value"] ?? "";
    return {
      experimentId: rec["experiment_id"] ?? "",
      kind: rec["kind"] ?? "",
      seed: num(rec, "seed", file),
      n: num(rec, "n", file),
      L: num(rec, "L", file),
      sigmaW2: rec["sigma_w2"] ?? "",
      method: rec["method"] ?? "",
      sparsity: rec["sparsity"] ?? "",
      scalingMode: rec["scaling_mode"] ?? "",
      scaleValue: rawScale === "" ? null : num(rec, "scale_value", file),
      eta: rec["eta"] ?? "",
      k: num(rec, "k", file),
      logJacNorm: rawNorm === "neg_inf" ? -Infinity : num(rec, "log_jac_norm", file),
      converged: rec["converged"] === "true",
    };
  });
}

export function parseApproxCsv(text: string, file: string): ApproxRow[] {
  return parseRecords(text, APPROX_HEADER, file).map((rec) => ({
    experimentId: rec["experiment_id"] ?? "",
    kind: rec["kind"] ?? "",
    replicate: rec["replicate"] ?? "",
    n: num(rec, "n", file),
    L: num(rec, "L", file),
    layer: num(rec, "layer", file),
    statistic: rec["statistic"] ?? "",
    value: num(rec, "value", file),
  }));
}
