/** Wires the panel DOM to the controller. */

import { ApiClient } from "./api.js";
import { eceReadout, renderDiagram } from "./chart.js";
import {
  PanelController,
  PanelView,
  sliderToTemperature,
  temperatureToSlider,
} from "./controller.js";
import { DiagramPayload, MetricsPayload } from "./types.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function fmt(v: number): string {
  return v.toFixed(4);
}

export function bootPanel(): PanelController {
  const api = new ApiClient();
  const svg = byId<HTMLElement>("chart") as unknown as SVGSVGElement;
  const banner = byId<HTMLDivElement>("banner");
  const eceLabel = byId<HTMLSpanElement>("ece-readout");
  const metricsLabel = byId<HTMLDivElement>("metrics-readout");
  const calibratorSelect = byId<HTMLSelectElement>("calibrator-select");
  const fitResult = byId<HTMLDivElement>("fit-result");

  const view: PanelView = {
    showDiagram(payload: DiagramPayload) {
      renderDiagram(payload, svg);
      eceLabel.textContent = eceReadout(payload);
    },
    showMetrics(payload: MetricsPayload) {
      metricsLabel.textContent =
        `SCE ${fmt(payload.sce)} · ACE ${fmt(payload.ace)} · NLL ${fmt(payload.nll)}`;
    },
    showBanner(message: string) {
      banner.textContent = message;
      banner.hidden = false;
    },
    clearBanner() {
      banner.hidden = true;
      banner.textContent = "";
    },
    addCalibrator(id: string, label: string) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = label;
      calibratorSelect.appendChild(option);
      calibratorSelect.value = id;
    },
    showFitResult(beforeEce: number, afterEce: number) {
      fitResult.textContent = `ECE before ${fmt(beforeEce)} → after ${fmt(afterEce)}`;
    },
  };

  const controller = new PanelController(api, view);

  const datasetInput = byId<HTMLInputElement>("dataset-file");
  datasetInput.addEventListener("change", async () => {
    const file = datasetInput.files?.[0];
    if (!file) return;
    try {
      const summary = await api.uploadDataset(await file.text(), "logits", file.name);
      controller.state.datasetId = summary.id;
      byId<HTMLSpanElement>("dataset-name").textContent = `${file.name} (n=${summary.n})`;
      controller.requestRefresh();
    } catch (err) {
      view.showBanner(err instanceof Error ? err.message : String(err));
    }
  });

  const modelInput = byId<HTMLInputElement>("model-file");
  modelInput.addEventListener("change", async () => {
    const file = modelInput.files?.[0];
    if (!file) return;
    try {
      const summary = await api.uploadModel(await file.text(), file.name);
      controller.state.modelId = summary.id;
      byId<HTMLSpanElement>("model-name").textContent = file.name;
    } catch (err) {
      view.showBanner(err instanceof Error ? err.message : String(err));
    }
  });

  const tSlider = byId<HTMLInputElement>("t-slider");
  const tLabel = byId<HTMLSpanElement>("t-readout");
  tSlider.value = String(temperatureToSlider(1));
  tLabel.textContent = "T = 1.000";
  tSlider.addEventListener("input", () => {
    const position = Number(tSlider.value);
    controller.setTemperatureSlider(position);
    tLabel.textContent = `T = ${sliderToTemperature(position).toFixed(3)}`;
    calibratorSelect.value = "slider";
  });

  const binsSlider = byId<HTMLInputElement>("bins-slider");
  const binsLabel = byId<HTMLSpanElement>("bins-readout");
  binsSlider.addEventListener("input", () => {
    controller.setBins(Number(binsSlider.value));
    binsLabel.textContent = `M = ${controller.state.bins}`;
  });

  calibratorSelect.addEventListener("change", () => {
    const value = calibratorSelect.value;
    if (value === "slider") {
      controller.setTemperatureSlider(Number(tSlider.value));
    } else {
      controller.selectCalibrator(value);
    }
  });

  byId<HTMLButtonElement>("fit-temperature").addEventListener("click", () => {
    void controller.triggerFit("temperature");
  });
  byId<HTMLButtonElement>("fit-clamping").addEventListener("click", () => {
    void controller.triggerFit("clamping");
  });

  return controller;
}

if (typeof document !== "undefined" && document.getElementById("chart")) {
  bootPanel();
}
