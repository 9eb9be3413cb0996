/**
 * Hand-rolled SVG line charts.
 *
 * No canvas, no chart library: every mark is an SVG element carrying data
 * attributes, so tests (and curious users) can read exactly what is drawn.
 * The chart only maps service-provided numbers to coordinates; it computes
 * nothing else.
 */

export interface Series {
  label: string;
  color: string;
  x: number[];
  y: number[];
  /** Dashed stroke, e.g. for reference curves. */
  dashed?: boolean;
}

export interface ChartOptions {
  width?: number;
  height?: number;
  logScale?: boolean;
  xLabel?: string;
  yLabel?: string;
  title?: string;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const MARGIN = { top: 28, right: 16, bottom: 40, left: 64 };

function el<K extends string>(
  doc: Document,
  tag: K,
  attrs: Record<string, string>,
  text?: string,
): SVGElement {
  const node = doc.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

/** Round-number ticks (1/2/5 ladder) covering [min, max]. */
export function niceTicks(min: number, max: number, count = 5): number[] {
  if (!(max > min)) {
    return [min];
  }
  const rawStep = (max - min) / Math.max(1, count);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    step = mult * power;
    if (step >= rawStep) {
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Powers of ten spanning [min, max] (both must be positive). */
export function logTicks(min: number, max: number): number[] {
  const lo = Math.floor(Math.log10(min));
  const hi = Math.ceil(Math.log10(max));
  const ticks: number[] = [];
  for (let e = lo; e <= hi; e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}

function formatTick(value: number): string {
  if (value === 0) {
    return "0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e4 || magnitude < 1e-3) {
    return value.toExponential(0).replace("e+", "e");
  }
  return String(Number(value.toPrecision(6)));
}

/**
 * Render a multi-series line chart into a fresh <svg>.
 *
 * On a log scale, points with y <= 0 are dropped (a concentration curve
 * that starts at zero simply enters the plot at its first positive value).
 */
export function renderLineChart(
  series: Series[],
  options: ChartOptions = {},
  doc: Document = globalThis.document,
): SVGSVGElement {
  const width = options.width ?? 640;
  const height = options.height ?? 320;
  const log = options.logScale ?? false;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const svg = el(doc, "svg", {
    xmlns: SVG_NS,
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    "data-log": String(log),
    class: "chart",
    role: "img",
  }) as SVGSVGElement;

  // collect plotted extents
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.x.length; i++) {
      const y = s.y[i]!;
      if (log && !(y > 0)) {
        continue;
      }
      xMin = Math.min(xMin, s.x[i]!);
      xMax = Math.max(xMax, s.x[i]!);
      yMin = Math.min(yMin, y);
      yMax = Math.max(yMax, y);
    }
  }
  const empty = !(xMax >= xMin) || !(yMax >= yMin);
  if (empty) {
    svg.appendChild(
      el(doc, "text", { x: String(width / 2), y: String(height / 2), "text-anchor": "middle", class: "chart-empty" }, "no plottable points"),
    );
    return svg;
  }
  if (xMax === xMin) {
    xMax = xMin + 1;
  }
  if (!log && yMin > 0) {
    yMin = 0; // concentrations read best anchored at zero
  }
  if (yMax === yMin) {
    yMax = yMin + (log ? yMin * 9 : 1);
  }

  const xScale = (v: number): number =>
    MARGIN.left + ((v - xMin) / (xMax - xMin)) * plotW;
  const yScale = log
    ? (v: number): number =>
        MARGIN.top +
        plotH -
        ((Math.log10(v) - Math.log10(yMin)) /
          (Math.log10(yMax) - Math.log10(yMin))) *
          plotH
    : (v: number): number =>
        MARGIN.top + plotH - ((v - yMin) / (yMax - yMin)) * plotH;

  // frame, grid, ticks
  const yTicks = log ? logTicks(yMin, yMax) : niceTicks(yMin, yMax);
  for (const tick of yTicks) {
    if (tick < yMin || tick > yMax) {
      continue;
    }
    const y = yScale(tick);
    svg.appendChild(
      el(doc, "line", {
        x1: String(MARGIN.left), x2: String(MARGIN.left + plotW),
        y1: String(y), y2: String(y),
        class: "grid-line",
        stroke: "#ddd", "stroke-width": "1",
      }),
    );
    svg.appendChild(
      el(doc, "text", {
        x: String(MARGIN.left - 6), y: String(y + 4),
        "text-anchor": "end", class: "tick-label", "font-size": "11",
      }, formatTick(tick)),
    );
  }
  for (const tick of niceTicks(xMin, xMax, 6)) {
    const x = xScale(tick);
    svg.appendChild(
      el(doc, "line", {
        x1: String(x), x2: String(x),
        y1: String(MARGIN.top + plotH), y2: String(MARGIN.top + plotH + 4),
        stroke: "#888", "stroke-width": "1",
      }),
    );
    svg.appendChild(
      el(doc, "text", {
        x: String(x), y: String(MARGIN.top + plotH + 16),
        "text-anchor": "middle", class: "tick-label", "font-size": "11",
      }, formatTick(tick)),
    );
  }
  svg.appendChild(
    el(doc, "rect", {
      x: String(MARGIN.left), y: String(MARGIN.top),
      width: String(plotW), height: String(plotH),
      fill: "none", stroke: "#888", "stroke-width": "1",
    }),
  );

  // series
  for (const s of series) {
    const points: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      const y = s.y[i]!;
      if (log && !(y > 0)) {
        continue;
      }
      points.push(`${xScale(s.x[i]!).toFixed(2)},${yScale(y).toFixed(2)}`);
    }
    if (points.length === 0) {
      continue;
    }
    const line = el(doc, "polyline", {
      points: points.join(" "),
      fill: "none",
      stroke: s.color,
      "stroke-width": "1.6",
      "data-series": s.label,
    });
    if (s.dashed) {
      line.setAttribute("stroke-dasharray", "5 3");
    }
    svg.appendChild(line);
  }

  // legend across the top
  let legendX = MARGIN.left;
  for (const s of series) {
    svg.appendChild(
      el(doc, "line", {
        x1: String(legendX), x2: String(legendX + 18),
        y1: "12", y2: "12",
        stroke: s.color, "stroke-width": "2",
        ...(s.dashed ? { "stroke-dasharray": "5 3" } : {}),
      }),
    );
    svg.appendChild(
      el(doc, "text", {
        x: String(legendX + 22), y: "16",
        class: "legend-label", "font-size": "11",
      }, s.label),
    );
    legendX += 22 + 9 * Math.max(3, s.label.length);
  }

  // axis labels
  if (options.xLabel) {
    svg.appendChild(
      el(doc, "text", {
        x: String(MARGIN.left + plotW / 2), y: String(height - 6),
        "text-anchor": "middle", class: "axis-label", "font-size": "12",
      }, options.xLabel),
    );
  }
  if (options.yLabel) {
    const x = 14;
    const y = MARGIN.top + plotH / 2;
    svg.appendChild(
      el(doc, "text", {
        x: String(x), y: String(y),
        "text-anchor": "middle", class: "axis-label", "font-size": "12",
        transform: `rotate(-90 ${x} ${y})`,
      }, options.yLabel + (log ? " (log scale)" : "")),
    );
  }
  if (options.title) {
    svg.appendChild(
      el(doc, "text", {
        x: String(width - MARGIN.right), y: "16",
        "text-anchor": "end", class: "chart-title", "font-size": "12",
        "font-weight": "bold",
      }, options.title),
    );
  }
  return svg;
}

/** Serialize a rendered chart to standalone SVG markup for download. */
export function chartSvgText(svg: SVGSVGElement): string {
  return '<?xml version="1.0" encoding="UTF-8"?>\n' + svg.outerHTML;
}
