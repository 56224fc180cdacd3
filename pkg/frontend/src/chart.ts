/** Reliability-diagram SVG rendering, straight from the server payload.
 *
 * Actual accuracy bars are blue, expected bars pink; the expected height for
 * bin m is exactly (m - 0.5) / M. Bar geometry carries the raw value in a
 * data-value attribute so tests can assert exact equality.
 */

import { DiagramPayload } from "./types.js";

export const ACTUAL_COLOR = "rgb(56,56,255)";
export const EXPECTED_COLOR = "rgb(255,164,181)";

export const PLOT = { left: 46, top: 16, width: 440, height: 300 } as const;
export const SVG_WIDTH = PLOT.left + PLOT.width + 12;
export const SVG_HEIGHT = PLOT.top + PLOT.height + 34;

const SVG_NS = "http://www.w3.org/2000/svg";

function el(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

function x(fraction: number): number {
  return PLOT.left + fraction * PLOT.width;
}

function y(value: number): number {
  return PLOT.top + PLOT.height - value * PLOT.height;
}

export function expectedHeight(index: number, m: number): number {
  return (index - 0.5) / m;
}

export function renderDiagram(payload: DiagramPayload, svg: SVGSVGElement): void {
  svg.setAttribute("viewBox", `0 0 ${SVG_WIDTH} ${SVG_HEIGHT}`);
  svg.replaceChildren();

  const inset = 0.08;
  for (const bin of payload.bins) {
    const width = (bin.upper - bin.lower) * PLOT.width;
    const bx = x(bin.lower) + width * inset;
    const bw = width * (1 - 2 * inset);
    const expected = expectedHeight(bin.index, payload.m);
    svg.appendChild(el("rect", {
      class: "bar-expected",
      "data-value": String(expected),
      x: String(bx),
      y: String(y(expected)),
      width: String(bw),
      height: String(expected * PLOT.height),
      fill: EXPECTED_COLOR,
    }));
    if (bin.accuracy > 0) {
      svg.appendChild(el("rect", {
        class: "bar-actual",
        "data-value": String(bin.accuracy),
        x: String(bx),
        y: String(y(bin.accuracy)),
        width: String(bw),
        height: String(bin.accuracy * PLOT.height),
        fill: ACTUAL_COLOR,
      }));
    }
  }

  svg.appendChild(el("line", {
    class: "diagonal",
    x1: String(x(0)), y1: String(y(0)),
    x2: String(x(1)), y2: String(y(1)),
    stroke: "gray", "stroke-dasharray": "4,3",
  }));
  svg.appendChild(el("line", {
    x1: String(PLOT.left), y1: String(y(0)),
    x2: String(x(1)), y2: String(y(0)), stroke: "black",
  }));
  svg.appendChild(el("line", {
    x1: String(PLOT.left), y1: String(PLOT.top),
    x2: String(PLOT.left), y2: String(y(0)), stroke: "black",
  }));
  for (const tick of [0, 0.2, 0.4, 0.6, 0.8, 1]) {
    const label = el("text", {
      x: String(x(tick)),
      y: String(y(0) + 16),
      "text-anchor": "middle",
      "font-size": "11",
    });
    label.textContent = tick.toFixed(1);
    svg.appendChild(label);
    const side = el("text", {
      x: String(PLOT.left - 6),
      y: String(y(tick) + 4),
      "text-anchor": "end",
      "font-size": "11",
    });
    side.textContent = tick.toFixed(1);
    svg.appendChild(side);
  }
}

/** The readout string shown beside the chart: always the payload's own ece. */
export function eceReadout(payload: DiagramPayload): string {
  return `ECE ${payload.ece.toFixed(4)}`;
}
