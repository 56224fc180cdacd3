/** Panel state machine: debounced refreshes, response sequencing, fit polling.
 *
 * Control changes funnel through requestRefresh(), which waits 100 ms of
 * quiet before issuing one diagram + metrics round trip, so a slider drag
 * costs at most one request per 100 ms. Every round trip gets a sequence
 * number; a response only lands if nothing newer has landed already, so a
 * slow stale response can never overwrite a fresher chart.
 */

import { DiagramPayload, JobPayload, MetricsPayload } from "./types.js";

export const DEBOUNCE_MS = 100;
export const POLL_MS = 500;

export const T_MIN = 0.05;
export const T_MAX = 20;

/** Slider position in [0, 1] -> temperature, log-scaled over [T_MIN, T_MAX]. */
export function sliderToTemperature(position: number): number {
  const clamped = Math.min(Math.max(position, 0), 1);
  return T_MIN * Math.pow(T_MAX / T_MIN, clamped);
}

export function temperatureToSlider(t: number): number {
  const clamped = Math.min(Math.max(t, T_MIN), T_MAX);
  return Math.log(clamped / T_MIN) / Math.log(T_MAX / T_MIN);
}

/** The slice of the HTTP client the controller needs; ApiClient satisfies it. */
export interface PanelApi {
  getDiagram(datasetId: string, bins: number, calibrator: string,
             model?: string): Promise<DiagramPayload>;
  getMetrics(datasetId: string, bins: number, calibrator: string,
             model?: string): Promise<MetricsPayload>;
  startFit(kind: "temperature" | "clamping",
           body: { dataset_id: string; model_id?: string;
                   config?: Record<string, unknown> }): Promise<string>;
  jobStatus(jobId: string): Promise<JobPayload>;
}

export interface PanelState {
  datasetId: string | null;
  modelId: string | null;
  /** "none" | "T:<value>" | fitted calibrator id */
  calibrator: string;
  sliderTemperature: number;
  bins: number;
  diagram: DiagramPayload | null;
  metrics: MetricsPayload | null;
}

export interface PanelView {
  showDiagram(payload: DiagramPayload): void;
  showMetrics(payload: MetricsPayload): void;
  showBanner(message: string): void;
  clearBanner(): void;
  addCalibrator(id: string, label: string): void;
  showFitResult(beforeEce: number, afterEce: number): void;
}

export class PanelController {
  readonly state: PanelState = {
    datasetId: null,
    modelId: null,
    calibrator: "none",
    sliderTemperature: 1,
    bins: 15,
    diagram: null,
    metrics: null,
  };

  private seq = 0;
  private applied = 0;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private api: PanelApi, private view: PanelView) {}

  /** Debounced entry point for every control change. */
  requestRefresh(): void {
    if (this.debounceTimer !== null) {
      clearTimeout(this.debounceTimer);
    }
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.refresh();
    }, DEBOUNCE_MS);
  }

  setTemperatureSlider(position: number): void {
    this.state.sliderTemperature = sliderToTemperature(position);
    this.state.calibrator = `T:${this.state.sliderTemperature}`;
    this.requestRefresh();
  }

  setBins(bins: number): void {
    this.state.bins = Math.min(Math.max(Math.round(bins), 1), 50);
    this.requestRefresh();
  }

  selectCalibrator(value: string): void {
    this.state.calibrator = value;
    this.requestRefresh();
  }

  /** One diagram + metrics round trip, guarded by the sequence number. */
  async refresh(): Promise<void> {
    if (!this.state.datasetId) {
      return;
    }
    const mySeq = ++this.seq;
    const { datasetId, bins, calibrator } = this.state;
    const model = this.state.modelId ?? undefined;
    try {
      const [diagram, metrics] = await Promise.all([
        this.api.getDiagram(datasetId, bins, calibrator, model),
        this.api.getMetrics(datasetId, bins, calibrator, model),
      ]);
      if (mySeq <= this.applied) {
        return; // a newer response already landed
      }
      this.applied = mySeq;
      this.state.diagram = diagram;
      this.state.metrics = metrics;
      this.view.clearBanner();
      this.view.showDiagram(diagram);
      this.view.showMetrics(metrics);
    } catch (err) {
      if (mySeq <= this.applied) {
        return;
      }
      this.applied = mySeq;
      // previous chart stays; controls remain live
      this.view.showBanner(err instanceof Error ? err.message : String(err));
    }
  }

  /** POST a fit, poll at 500 ms, then surface the fitted calibrator. */
  async triggerFit(
    kind: "temperature" | "clamping",
    config?: Record<string, unknown>,
  ): Promise<void> {
    if (!this.state.datasetId) {
      this.view.showBanner("upload a dataset first");
      return;
    }
    if (kind === "clamping" && !this.state.modelId) {
      this.view.showBanner("clamping needs an uploaded model");
      return;
    }
    const beforeEce = this.state.diagram?.ece;
    let jobId: string;
    try {
      jobId = await this.api.startFit(kind, {
        dataset_id: this.state.datasetId,
        ...(kind === "clamping" ? { model_id: this.state.modelId! } : {}),
        ...(config ? { config } : {}),
      });
    } catch (err) {
      this.view.showBanner(err instanceof Error ? err.message : String(err));
      return;
    }
    await this.pollJob(jobId, kind, beforeEce);
  }

  private pollJob(
    jobId: string,
    kind: string,
    beforeEce: number | undefined,
  ): Promise<void> {
    return new Promise((resolve) => {
      const tick = async () => {
        let payload;
        try {
          payload = await this.api.jobStatus(jobId);
        } catch (err) {
          this.view.showBanner(err instanceof Error ? err.message : String(err));
          resolve();
          return;
        }
        if (payload.status === "failed") {
          this.view.showBanner(payload.error ?? "fit failed");
          resolve();
          return;
        }
        if (payload.status === "done" && payload.report) {
          const calId = payload.report.calibrator_id;
          this.view.addCalibrator(calId, `${kind} (${calId})`);
          this.state.calibrator = calId;
          await this.refresh();
          const afterEce = this.state.diagram?.ece;
          if (beforeEce !== undefined && afterEce !== undefined) {
            this.view.showFitResult(beforeEce, afterEce);
          }
          resolve();
          return;
        }
        setTimeout(() => void tick(), POLL_MS);
      };
      void tick();
    });
  }
}
