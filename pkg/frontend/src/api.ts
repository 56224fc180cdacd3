/** Thin fetch client for the calibration service. */

import {
  CalibratorSummary,
  DiagramPayload,
  JobPayload,
  MetricsPayload,
  parseDiagramPayload,
  parseMetricsPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function asJson(resp: Response): Promise<unknown> {
  const body: unknown = await resp.json().catch(() => null);
  if (!resp.ok) {
    const message =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : `HTTP ${resp.status}`;
    throw new Error(message);
  }
  return body;
}

export class ApiClient {
  constructor(private fetchFn: FetchLike = (u, i) => fetch(u, i)) {}

  async uploadDataset(csv: string, kind: "logits" | "inputs", name = ""): Promise<{
    id: string;
    n: number;
  }> {
    const resp = await this.fetchFn(
      `/api/datasets?type=${kind}&name=${encodeURIComponent(name)}`,
      { method: "POST", body: csv, headers: { "Content-Type": "text/csv" } },
    );
    return (await asJson(resp)) as { id: string; n: number };
  }

  async uploadModel(json: string, name = ""): Promise<{ id: string }> {
    const resp = await this.fetchFn(
      `/api/models?name=${encodeURIComponent(name)}`,
      { method: "POST", body: json, headers: { "Content-Type": "application/json" } },
    );
    return (await asJson(resp)) as { id: string };
  }

  async getDiagram(
    datasetId: string,
    bins: number,
    calibrator: string,
    model?: string,
  ): Promise<DiagramPayload> {
    const extra = model ? `&model=${encodeURIComponent(model)}` : "";
    const resp = await this.fetchFn(
      `/api/datasets/${encodeURIComponent(datasetId)}/diagram?bins=${bins}` +
        `&calibrator=${encodeURIComponent(calibrator)}${extra}`,
    );
    return parseDiagramPayload(await asJson(resp));
  }

  async getMetrics(
    datasetId: string,
    bins: number,
    calibrator: string,
    model?: string,
  ): Promise<MetricsPayload> {
    const extra = model ? `&model=${encodeURIComponent(model)}` : "";
    const resp = await this.fetchFn(
      `/api/datasets/${encodeURIComponent(datasetId)}/metrics?bins=${bins}` +
        `&calibrator=${encodeURIComponent(calibrator)}${extra}`,
    );
    return parseMetricsPayload(await asJson(resp));
  }

  async startFit(
    kind: "temperature" | "clamping",
    body: { dataset_id: string; model_id?: string; config?: Record<string, unknown> },
  ): Promise<string> {
    const resp = await this.fetchFn(`/api/fit/${kind}`, {
      method: "POST",
      body: JSON.stringify(body),
      headers: { "Content-Type": "application/json" },
    });
    const payload = (await asJson(resp)) as { job_id: string };
    return payload.job_id;
  }

  async jobStatus(jobId: string): Promise<JobPayload> {
    const resp = await this.fetchFn(`/api/jobs/${encodeURIComponent(jobId)}`);
    return (await asJson(resp)) as JobPayload;
  }

  async listCalibrators(): Promise<CalibratorSummary[]> {
    const resp = await this.fetchFn("/api/calibrators");
    const payload = (await asJson(resp)) as { calibrators: CalibratorSummary[] };
    return payload.calibrators;
  }
}
