/** The 4-sample diagram payload (confidences 0.9, 0.9, 0.6, 0.8; second one
 * wrong) exactly as the service serializes it: bins 6 and 8 perfect, bin 9
 * half right, ECE 0.35. */

import { DiagramPayload, MetricsPayload } from "../src/types.js";

function emptyBin(index: number, m: number) {
  return {
    index,
    lower: (index - 1) / m,
    upper: index / m,
    count: 0,
    accuracy: 0,
    mean_confidence: 0,
    gap: 0,
  };
}

export function fourSamplePayload(): DiagramPayload {
  const bins = Array.from({ length: 10 }, (_, i) => emptyBin(i + 1, 10));
  bins[5] = { index: 6, lower: 0.5, upper: 0.6, count: 1, accuracy: 1,
              mean_confidence: 0.6, gap: 0.4 };
  bins[7] = { index: 8, lower: 0.7, upper: 0.8, count: 1, accuracy: 1,
              mean_confidence: 0.8, gap: 0.2 };
  bins[8] = { index: 9, lower: 0.8, upper: 0.9, count: 2, accuracy: 0.5,
              mean_confidence: 0.9, gap: 0.4 };
  return { m: 10, n: 4, ece: 0.35, bins };
}

export function allEmptyPayload(m: number): DiagramPayload {
  return {
    m,
    n: 0,
    ece: 0,
    bins: Array.from({ length: m }, (_, i) => emptyBin(i + 1, m)),
  };
}

export function metricsPayload(ece: number): MetricsPayload {
  return { ece, sce: 0.1, ace: 0.12, nll: 0.5, num_bins_used: 10, n: 4 };
}
