/** Debounce, response sequencing, and fit-job polling. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  DEBOUNCE_MS,
  PanelApi,
  PanelController,
  PanelView,
  POLL_MS,
  sliderToTemperature,
  temperatureToSlider,
  T_MAX,
  T_MIN,
} from "../src/controller.js";
import { DiagramPayload, JobPayload, MetricsPayload } from "../src/types.js";
import { fourSamplePayload, metricsPayload } from "./fixtures.js";

class Deferred<T> {
  promise: Promise<T>;
  resolve!: (value: T) => void;
  reject!: (err: unknown) => void;
  constructor() {
    this.promise = new Promise((res, rej) => {
      this.resolve = res;
      this.reject = rej;
    });
  }
}

interface DiagramCall {
  bins: number;
  calibrator: string;
  deferred: Deferred<DiagramPayload>;
}

class FakeApi implements PanelApi {
  diagramCalls: DiagramCall[] = [];
  auto = true;
  autoPayload: () => DiagramPayload = fourSamplePayload;
  jobStatuses: JobPayload[] = [];
  startedFits: Array<{ kind: string; body: unknown }> = [];
  failStart: string | null = null;

  getDiagram(_ds: string, bins: number, calibrator: string): Promise<DiagramPayload> {
    const deferred = new Deferred<DiagramPayload>();
    this.diagramCalls.push({ bins, calibrator, deferred });
    if (this.auto) {
      deferred.resolve(this.autoPayload());
    }
    return deferred.promise;
  }

  getMetrics(): Promise<MetricsPayload> {
    return Promise.resolve(metricsPayload(0.35));
  }

  startFit(kind: "temperature" | "clamping", body: unknown): Promise<string> {
    this.startedFits.push({ kind, body });
    if (this.failStart) {
      return Promise.reject(new Error(this.failStart));
    }
    return Promise.resolve("job1");
  }

  jobStatus(): Promise<JobPayload> {
    const next = this.jobStatuses.length > 1
      ? this.jobStatuses.shift()!
      : this.jobStatuses[0];
    return Promise.resolve(next);
  }
}

class FakeView implements PanelView {
  diagrams: DiagramPayload[] = [];
  metrics: MetricsPayload[] = [];
  banners: string[] = [];
  calibrators: Array<{ id: string; label: string }> = [];
  fitResults: Array<{ before: number; after: number }> = [];

  showDiagram(payload: DiagramPayload) {
    this.diagrams.push(payload);
  }
  showMetrics(payload: MetricsPayload) {
    this.metrics.push(payload);
  }
  showBanner(message: string) {
    this.banners.push(message);
  }
  clearBanner() {}
  addCalibrator(id: string, label: string) {
    this.calibrators.push({ id, label });
  }
  showFitResult(before: number, after: number) {
    this.fitResults.push({ before, after });
  }
}

function makePanel() {
  const api = new FakeApi();
  const view = new FakeView();
  const controller = new PanelController(api, view);
  controller.state.datasetId = "ds1";
  return { api, view, controller };
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("temperature slider scale", () => {
  it("is log-scaled over [0.05, 20]", () => {
    expect(sliderToTemperature(0)).toBeCloseTo(T_MIN, 12);
    expect(sliderToTemperature(1)).toBeCloseTo(T_MAX, 12);
    expect(sliderToTemperature(0.5)).toBeCloseTo(Math.sqrt(T_MIN * T_MAX), 12);
    for (const t of [0.05, 0.3, 1, 4.7, 20]) {
      expect(sliderToTemperature(temperatureToSlider(t))).toBeCloseTo(t, 10);
    }
  });
});

describe("debounced control changes", () => {
  it("a drag emits at most one request per 100 ms and lands on the final value", async () => {
    const { api, controller } = makePanel();
    // drag from T=1 toward T=2.5 with events every 10 ms
    const positions = [];
    for (let i = 0; i <= 20; i++) {
      positions.push(
        temperatureToSlider(1) + (temperatureToSlider(2.5) - temperatureToSlider(1)) * (i / 20),
      );
    }
    for (const position of positions) {
      controller.setTemperatureSlider(position);
      await vi.advanceTimersByTimeAsync(10);
    }
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 10);

    const elapsed = positions.length * 10 + DEBOUNCE_MS + 10;
    expect(api.diagramCalls.length).toBeLessThanOrEqual(Math.ceil(elapsed / 100));
    const last = api.diagramCalls[api.diagramCalls.length - 1];
    const finalT = Number(last.calibrator.slice(2));
    expect(finalT).toBeCloseTo(2.5, 10);
  });

  it("rapid-fire changes inside one window collapse to a single request", async () => {
    const { api, controller } = makePanel();
    for (let i = 0; i < 30; i++) {
      controller.setBins(5 + (i % 10));
      await vi.advanceTimersByTimeAsync(1);
    }
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS + 5);
    expect(api.diagramCalls).toHaveLength(1);
    expect(api.diagramCalls[0].bins).toBe(controller.state.bins);
  });

  it("bins clamp into [1, 50]", () => {
    const { controller } = makePanel();
    controller.setBins(0);
    expect(controller.state.bins).toBe(1);
    controller.setBins(99);
    expect(controller.state.bins).toBe(50);
  });
});

describe("response sequencing", () => {
  it("a stale response never overwrites a newer one", async () => {
    const { api, view, controller } = makePanel();
    api.auto = false;

    const first = controller.refresh();
    const second = controller.refresh();
    expect(api.diagramCalls).toHaveLength(2);

    const newer = fourSamplePayload();
    newer.ece = 0.111;
    api.diagramCalls[1].deferred.resolve(newer);
    await second;

    const older = fourSamplePayload();
    older.ece = 0.999;
    api.diagramCalls[0].deferred.resolve(older);
    await first;

    expect(view.diagrams).toHaveLength(1);
    expect(view.diagrams[0].ece).toBe(0.111);
    expect(controller.state.diagram?.ece).toBe(0.111);
  });

  it("an error on a stale request is also discarded", async () => {
    const { api, view, controller } = makePanel();
    api.auto = false;
    const first = controller.refresh();
    const second = controller.refresh();
    api.diagramCalls[1].deferred.resolve(fourSamplePayload());
    await second;
    api.diagramCalls[0].deferred.reject(new Error("slow network"));
    await first;
    expect(view.banners).toHaveLength(0);
    expect(view.diagrams).toHaveLength(1);
  });
});

describe("failure banners", () => {
  it("shows the message and keeps the previous chart", async () => {
    const { api, view, controller } = makePanel();
    await controller.refresh();
    expect(view.diagrams).toHaveLength(1);

    api.auto = false;
    const failing = controller.refresh();
    api.diagramCalls[1].deferred.reject(new Error("label 5 out of range"));
    await failing;

    expect(view.banners).toEqual(["label 5 out of range"]);
    expect(view.diagrams).toHaveLength(1); // unchanged
    expect(controller.state.diagram?.ece).toBe(0.35);
  });
});

describe("fit jobs", () => {
  it("polls until done, registers the calibrator, and reports before/after", async () => {
    const { api, view, controller } = makePanel();
    await controller.refresh(); // before-state: ece 0.35

    const after = fourSamplePayload();
    after.ece = 0.05;
    api.autoPayload = () => after;
    api.jobStatuses = [
      { status: "queued" },
      { status: "running" },
      { status: "done", report: { calibrator_id: "cal7", final_loss: 0.2, initial_loss: 0.5 } },
    ];

    const fit = controller.triggerFit("temperature");
    await vi.advanceTimersByTimeAsync(POLL_MS * 3);
    await fit;

    expect(api.startedFits).toEqual([
      { kind: "temperature", body: { dataset_id: "ds1" } },
    ]);
    expect(view.calibrators).toEqual([{ id: "cal7", label: "temperature (cal7)" }]);
    expect(controller.state.calibrator).toBe("cal7");
    expect(view.fitResults).toEqual([{ before: 0.35, after: 0.05 }]);
  });

  it("zero-step clamping leaves before and after identical", async () => {
    const { api, view, controller } = makePanel();
    controller.state.modelId = "mdl1";
    await controller.refresh();
    api.jobStatuses = [
      { status: "done", report: { calibrator_id: "cal1", final_loss: 0.5, initial_loss: 0.5 } },
    ];
    const fit = controller.triggerFit("clamping", { steps: 0 });
    await vi.advanceTimersByTimeAsync(POLL_MS);
    await fit;
    expect(view.fitResults).toEqual([{ before: 0.35, after: 0.35 }]);
    expect(api.startedFits[0].body).toEqual({
      dataset_id: "ds1",
      model_id: "mdl1",
      config: { steps: 0 },
    });
  });

  it("surfaces the server failure message verbatim", async () => {
    const { api, view, controller } = makePanel();
    await controller.refresh();
    api.jobStatuses = [
      { status: "failed", error: "dimension mismatch: dataset dim 3 vs model 2" },
    ];
    const fit = controller.triggerFit("temperature");
    await vi.advanceTimersByTimeAsync(POLL_MS);
    await fit;
    expect(view.banners).toContain("dimension mismatch: dataset dim 3 vs model 2");
  });

  it("rejecting the fit POST shows a banner", async () => {
    const { api, view, controller } = makePanel();
    api.failStart = "unknown dataset 'ds1'";
    await controller.triggerFit("temperature");
    expect(view.banners).toEqual(["unknown dataset 'ds1'"]);
  });

  it("clamping without a model is blocked client-side", async () => {
    const { api, view, controller } = makePanel();
    await controller.triggerFit("clamping");
    expect(view.banners).toEqual(["clamping needs an uploaded model"]);
    expect(api.startedFits).toHaveLength(0);
  });
});
