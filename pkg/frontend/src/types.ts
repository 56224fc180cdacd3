/** Payload shapes mirrored from the service JSON, plus structural checks.
 *
 * The panel renders exclusively from these payloads; no metric is ever
 * recomputed client-side.
 */

export interface BinPayload {
  index: number;
  lower: number;
  upper: number;
  count: number;
  accuracy: number;
  mean_confidence: number;
  gap: number;
}

export interface DiagramPayload {
  m: number;
  n: number;
  ece: number;
  bins: BinPayload[];
}

export interface MetricsPayload {
  ece: number;
  sce: number;
  ace: number;
  nll: number;
  num_bins_used: number;
  n: number;
}

export interface CalibratorSummary {
  id: string;
  kind: string;
  T?: number;
  model_id?: string;
}

export interface JobPayload {
  status: "queued" | "running" | "done" | "failed";
  report?: { calibrator_id: string; final_loss: number; initial_loss: number };
  error?: string;
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

export function parseDiagramPayload(raw: unknown): DiagramPayload {
  const obj = raw as DiagramPayload;
  if (
    !obj || typeof obj !== "object" ||
    !isNum(obj.m) || !isNum(obj.n) || !isNum(obj.ece) ||
    !Array.isArray(obj.bins) || obj.bins.length !== obj.m
  ) {
    throw new Error("malformed diagram payload");
  }
  for (const bin of obj.bins) {
    if (
      !bin || !isNum(bin.index) || !isNum(bin.lower) || !isNum(bin.upper) ||
      !isNum(bin.count) || !isNum(bin.accuracy) ||
      !isNum(bin.mean_confidence) || !isNum(bin.gap)
    ) {
      throw new Error("malformed diagram payload");
    }
  }
  return obj;
}

export function parseMetricsPayload(raw: unknown): MetricsPayload {
  const obj = raw as MetricsPayload;
  if (
    !obj || typeof obj !== "object" ||
    !isNum(obj.ece) || !isNum(obj.sce) || !isNum(obj.ace) || !isNum(obj.nll)
  ) {
    throw new Error("malformed metrics payload");
  }
  return obj;
}
