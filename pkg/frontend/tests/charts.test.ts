// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import {
  chartSvgText,
  logTicks,
  niceTicks,
  renderLineChart,
} from "../src/charts.js";

describe("niceTicks", () => {
  it("covers the range with a 1/2/5 step", () => {
    const ticks = niceTicks(0, 10);
    expect(ticks[0]).toBe(0);
    expect(ticks[ticks.length - 1]).toBeCloseTo(10, 9);
    for (let i = 1; i < ticks.length; i++) {
      expect(ticks[i]!).toBeGreaterThan(ticks[i - 1]!);
    }
    const step = ticks[1]! - ticks[0]!;
    const mantissa = step / Math.pow(10, Math.floor(Math.log10(step)));
    expect([1, 2, 5, 10]).toContainEqual(Math.round(mantissa));
  });

  it("degenerates to a single tick when the span is empty", () => {
    expect(niceTicks(3, 3)).toEqual([3]);
  });

  it("handles tiny magnitudes", () => {
    const ticks = niceTicks(0, 3.2e-4);
    expect(ticks.length).toBeGreaterThan(2);
    expect(ticks[ticks.length - 1]!).toBeLessThanOrEqual(3.2e-4 + 1e-12);
  });
});

describe("logTicks", () => {
  it("returns consecutive powers of ten spanning the range", () => {
    const ticks = logTicks(0.003, 500);
    expect(ticks[0]!).toBeLessThanOrEqual(0.003);
    expect(ticks[ticks.length - 1]!).toBeGreaterThanOrEqual(500);
    for (let i = 1; i < ticks.length; i++) {
      expect(ticks[i]! / ticks[i - 1]!).toBeCloseTo(10, 9);
    }
  });
});

describe("renderLineChart", () => {
  const triangle = {
    label: "Cbm",
    color: "#d62728",
    x: [0, 2, 4],
    y: [0, 4, 0],
  };

  it("renders one polyline per series with its label attached", () => {
    const svg = renderLineChart([
      triangle,
      { label: "plasma", color: "#777", x: [0, 4], y: [1, 1], dashed: true },
    ]);
    const lines = svg.querySelectorAll("polyline");
    expect(lines.length).toBe(2);
    expect(lines[0]!.getAttribute("data-series")).toBe("Cbm");
    expect(lines[1]!.getAttribute("data-series")).toBe("plasma");
    expect(lines[1]!.getAttribute("stroke-dasharray")).toBe("5 3");
    expect(svg.getAttribute("data-log")).toBe("false");
    // legend and axis labels present
    expect(svg.textContent).toContain("Cbm");
    expect(svg.textContent).toContain("plasma");
  });

  it("maps larger values to smaller y pixel coordinates", () => {
    const svg = renderLineChart([triangle]);
    const points = svg
      .querySelector("polyline")!
      .getAttribute("points")!
      .split(" ")
      .map((pair) => pair.split(",").map(Number));
    expect(points.length).toBe(3);
    // the peak (y=4) must sit above (smaller pixel y) the endpoints (y=0)
    expect(points[1]![1]!).toBeLessThan(points[0]![1]!);
    expect(points[1]![1]!).toBeLessThan(points[2]![1]!);
    // x pixels increase with time
    expect(points[0]![0]!).toBeLessThan(points[1]![0]!);
    expect(points[1]![0]!).toBeLessThan(points[2]![0]!);
  });

  it("drops non-positive points on log scale", () => {
    const svg = renderLineChart(
      [{ label: "c", color: "#000", x: [0, 1, 2], y: [0, 1, 10] }],
      { logScale: true },
    );
    expect(svg.getAttribute("data-log")).toBe("true");
    const points = svg.querySelector("polyline")!.getAttribute("points")!;
    expect(points.split(" ").length).toBe(2);
  });

  it("says so when nothing is plottable", () => {
    const svg = renderLineChart(
      [{ label: "c", color: "#000", x: [0, 1], y: [0, -1] }],
      { logScale: true },
    );
    expect(svg.querySelector("polyline")).toBeNull();
    expect(svg.textContent).toContain("no plottable points");
  });

  it("marks the y axis when log scaled", () => {
    const svg = renderLineChart(
      [{ label: "c", color: "#000", x: [0, 1], y: [1, 10] }],
      { logScale: true, yLabel: "concentration" },
    );
    expect(svg.textContent).toContain("concentration (log scale)");
  });
});

describe("chartSvgText", () => {
  it("serializes to a standalone SVG document", () => {
    const svg = renderLineChart([
      { label: "c", color: "#000", x: [0, 1], y: [0, 1] },
    ]);
    const text = chartSvgText(svg);
    expect(text.startsWith('<?xml version="1.0"')).toBe(true);
    expect(text).toContain("<svg");
    expect(text).toContain("polyline");
  });
});
