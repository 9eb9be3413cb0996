/**
 * Workbench application: wires the API client, the state store, the forms
 * and the SVG charts into one page.
 *
 * All numbers shown in tables come verbatim from the service JSON
 * (String(value) — no client-side rounding or recomputation), and chart
 * re-renders (log toggle, compartment visibility) reuse the stashed job
 * results without touching the network.
 */

import {
  ApiError,
  ConnectionError,
  WorkbenchApi,
  type EstimateResultJson,
  type EstimationTrace,
  type JobRequestBody,
  type JobSnapshot,
  type SimulateResultJson,
  type SweepResultJson,
  type TrajectoryJson,
} from "./api.js";
import { chartSvgText, renderLineChart, type Series } from "./charts.js";
import {
  BoundsForm,
  EstimationOptionsForm,
  ParameterForm,
  SweepForm,
} from "./forms.js";
import {
  COMPARTMENTS,
  COMPARTMENT_COLORS,
  WorkbenchState,
  type Compartment,
} from "./state.js";

export const DEFAULT_POLL_INTERVAL_MS = 1000;

const PLASMA_COLOR = "#7f7f7f";
const SWEEP_PALETTE = [
  "#7f7f7f",
  "#1f77b4",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#17becf",
];

export type DownloadSink = (name: string, mime: string, content: string) => void;

export interface WorkbenchOptions {
  pollIntervalMs?: number;
  downloadSink?: DownloadSink;
}

/** Loose CSV reader used ONLY to draw the uploaded points; the service owns parsing. */
export function parseCsvForDisplay(text: string): {
  columns: string[];
  rows: number[][];
} {
  const lines = text.split(/\r?\n/).filter((line) => line.trim() !== "");
  if (lines.length === 0) {
    return { columns: [], rows: [] };
  }
  const columns = lines[0]!.split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    rows.push(columns.map((_, i) => Number(cells[i] ?? NaN)));
  }
  return { columns, rows };
}

function browserDownloadSink(name: string, mime: string, content: string): void {
  const blob = new Blob([content], { type: mime });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = name;
  document.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}

const SHELL_HTML = `
<header class="topbar">
  <h1>CNS drug distribution workbench</h1>
  <div id="conn-banner" class="banner" hidden>
    <span id="conn-message"></span>
    <button id="conn-retry" type="button">Retry</button>
  </div>
</header>
<div class="layout">
  <aside class="sidebar">
    <section id="data-section">
      <h2>Observed data</h2>
      <input id="csv-file" type="file" accept=".csv,text/csv" />
      <textarea id="csv-paste" rows="5" placeholder="paste CSV here"></textarea>
      <div class="button-row">
        <button id="load-csv" type="button">Load pasted CSV</button>
        <button id="load-sample" type="button">Load sample dataset</button>
      </div>
      <div id="dataset-info" class="info"></div>
      <span id="data-error" class="field-error"></span>
    </section>
    <section id="param-section">
      <h2>Model parameters</h2>
      <div id="param-form"></div>
      <button id="run-simulate" type="button">Simulate</button>
      <span id="simulate-error" class="field-error"></span>
    </section>
    <section id="estimate-section">
      <h2>Estimation</h2>
      <div id="bounds-form"></div>
      <details>
        <summary>optimizer settings</summary>
        <div id="de-form"></div>
      </details>
      <button id="run-estimate" type="button">Estimate</button>
      <span id="estimate-error" class="field-error"></span>
    </section>
    <section id="sweep-section">
      <h2>Sensitivity sweep</h2>
      <div id="sweep-form"></div>
      <button id="run-sweep" type="button">Sweep</button>
      <span id="sweep-error" class="field-error"></span>
    </section>
  </aside>
  <main class="main">
    <section id="jobs-section">
      <h2>Jobs</h2>
      <ul id="jobs-list"></ul>
    </section>
    <section id="observed-section" hidden>
      <h2>Observed data</h2>
      <div id="observed-chart"></div>
    </section>
    <section id="result-section">
      <div id="result-view"><p class="placeholder">No job selected.</p></div>
    </section>
  </main>
</div>
`;

export class WorkbenchApp {
  readonly api: WorkbenchApi;
  readonly state: WorkbenchState;
  readonly pollIntervalMs: number;

  paramForm: ParameterForm | null = null;
  boundsForm: BoundsForm | null = null;
  sweepForm: SweepForm | null = null;
  deForm: EstimationOptionsForm | null = null;

  selected: string | null = null;

  private readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly sink: DownloadSink;
  private readonly timers = new Map<string, ReturnType<typeof setInterval>>();
  private readonly results = new Map<string, unknown>();
  private formsBuilt = false;

  constructor(root: HTMLElement, api: WorkbenchApi, options: WorkbenchOptions = {}) {
    this.root = root;
    this.doc = root.ownerDocument;
    this.api = api;
    this.state = new WorkbenchState();
    this.pollIntervalMs = options.pollIntervalMs ?? DEFAULT_POLL_INTERVAL_MS;
    this.sink = options.downloadSink ?? browserDownloadSink;

    root.innerHTML = SHELL_HTML;
    this.el("conn-retry").addEventListener("click", () => void this.start());
    this.el("load-sample").addEventListener("click", () => void this.loadSample());
    this.el("load-csv").addEventListener("click", () => {
      const text = this.el<HTMLTextAreaElement>("csv-paste").value;
      void this.uploadCsvText(text);
    });
    this.el("csv-file").addEventListener("change", () => {
      const input = this.el<HTMLInputElement>("csv-file");
      const file = input.files?.[0];
      if (file) {
        void file.text().then((text) => this.uploadCsvText(text));
      }
    });
    this.el("run-simulate").addEventListener("click", () => void this.runSimulate());
    this.el("run-estimate").addEventListener("click", () => void this.runEstimate());
    this.el("run-sweep").addEventListener("click", () => void this.runSweep());

    this.state.subscribe(() => this.renderJobs());
  }

  el<T extends HTMLElement = HTMLElement>(id: string): T {
    const node = this.root.querySelector(`#${id}`);
    if (!node) {
      throw new Error(`missing element #${id}`);
    }
    return node as T;
  }

  /** Fetch the manifest and build the forms; shows the banner when offline. */
  async start(): Promise<boolean> {
    try {
      const rows = await this.api.manifest();
      this.state.initFromManifest(rows);
      this.buildForms();
      this.el("conn-banner").hidden = true;
      return true;
    } catch (err) {
      if (err instanceof ConnectionError) {
        this.el("conn-message").textContent = err.message;
        this.el("conn-banner").hidden = false;
        return false;
      }
      throw err;
    }
  }

  private buildForms(): void {
    if (this.formsBuilt) {
      return;
    }
    this.paramForm = new ParameterForm(
      this.el("param-form"),
      this.state.manifest,
      this.state.paramValues,
    );
    this.boundsForm = new BoundsForm(
      this.el("bounds-form"),
      this.state.manifest,
      this.state.paramValues,
    );
    this.sweepForm = new SweepForm(this.el("sweep-form"), this.state.manifest);
    this.deForm = new EstimationOptionsForm(this.el("de-form"));
    this.formsBuilt = true;
  }

  dispose(): void {
    for (const timer of this.timers.values()) {
      clearInterval(timer);
    }
    this.timers.clear();
  }

  // ----------------------------------------------------------------- data

  async loadSample(): Promise<boolean> {
    try {
      const text = await this.api.sampleCsv();
      this.el<HTMLTextAreaElement>("csv-paste").value = text;
      return await this.uploadCsvText(text);
    } catch (err) {
      this.handleActionError(err, "data-error");
      return false;
    }
  }

  async uploadCsvText(text: string): Promise<boolean> {
    const errorEl = this.el("data-error");
    errorEl.textContent = "";
    if (text.trim() === "") {
      errorEl.textContent = "nothing to upload";
      return false;
    }
    try {
      const info = await this.api.uploadDataset(text);
      this.state.setDataset(info, text);
      const embedded = Object.keys(info.parameters).length;
      this.el("dataset-info").textContent =
        `${info.rows} rows · columns: ${info.columns.join(", ")}` +
        (embedded > 0 ? ` · ${embedded} parameter values taken from the file` : "");
      if (embedded > 0) {
        this.paramForm?.setValues(info.parameters);
      }
      this.renderObservedChart();
      return true;
    } catch (err) {
      this.handleActionError(err, "data-error");
      return false;
    }
  }

  private renderObservedChart(): void {
    const section = this.el("observed-section");
    const container = this.el("observed-chart");
    container.innerHTML = "";
    const csv = this.state.uploadedCsv;
    if (!csv) {
      section.hidden = true;
      return;
    }
    const { columns, rows } = parseCsvForDisplay(csv);
    const timeIdx = columns.indexOf("time");
    if (timeIdx < 0) {
      section.hidden = true;
      return;
    }
    const series: Series[] = [];
    const wanted: Array<[string, string, boolean]> = [
      ["plasma", PLASMA_COLOR, true],
      ...COMPARTMENTS.map(
        (c): [string, string, boolean] => [c, COMPARTMENT_COLORS[c], false],
      ),
    ];
    for (const [name, color, dashed] of wanted) {
      const idx = columns.indexOf(name);
      if (idx < 0) {
        continue;
      }
      const x: number[] = [];
      const y: number[] = [];
      for (const row of rows) {
        const t = row[timeIdx]!;
        const v = row[idx]!;
        if (Number.isFinite(t) && Number.isFinite(v)) {
          x.push(t);
          y.push(v);
        }
      }
      if (x.length > 0) {
        series.push({ label: name, color, x, y, dashed });
      }
    }
    container.appendChild(
      renderLineChart(
        series,
        {
          title: "uploaded dataset",
          xLabel: "time (h)",
          yLabel: "concentration (mg/L)",
          height: 240,
        },
        this.doc,
      ),
    );
    section.hidden = false;
  }

  // ----------------------------------------------------------------- jobs

  private requireDataset(errorId: string): string | null {
    const dataset = this.state.dataset;
    if (!dataset) {
      this.el(errorId).textContent = "upload a dataset first";
      return null;
    }
    return dataset.id;
  }

  async runSimulate(): Promise<string | null> {
    this.el("simulate-error").textContent = "";
    this.paramForm?.clearErrors();
    const datasetId = this.requireDataset("simulate-error");
    const params = this.paramForm?.read() ?? null;
    if (!datasetId || !params) {
      return null;
    }
    return this.submit(
      { kind: "simulate", dataset_id: datasetId, params },
      "simulate-error",
    );
  }

  async runEstimate(): Promise<string | null> {
    this.el("estimate-error").textContent = "";
    const datasetId = this.requireDataset("estimate-error");
    const bounds = this.boundsForm?.read() ?? null;
    const de = this.deForm?.read() ?? null;
    if (!datasetId || !bounds || !de) {
      return null;
    }
    const body: JobRequestBody = { kind: "estimate", dataset_id: datasetId, bounds };
    if (Object.keys(de).length > 0) {
      body.de = de;
    }
    return this.submit(body, "estimate-error");
  }

  async runSweep(): Promise<string | null> {
    this.el("sweep-error").textContent = "";
    const datasetId = this.requireDataset("sweep-error");
    const params = this.paramForm?.read() ?? null;
    if (!datasetId || !params) {
      if (datasetId) {
        this.el("sweep-error").textContent = "fix the parameter values first";
      }
      return null;
    }
    const name = this.sweepForm?.parameterSelect.value ?? "";
    const sweep = this.sweepForm?.read(params[name] ?? NaN) ?? null;
    if (!sweep) {
      return null;
    }
    return this.submit(
      { kind: "sweep", dataset_id: datasetId, params, sweep },
      "sweep-error",
    );
  }

  private async submit(
    body: JobRequestBody,
    errorId: string,
  ): Promise<string | null> {
    try {
      const id = await this.api.submitJob(body);
      this.selected = id;
      this.track(id);
      return id;
    } catch (err) {
      this.handleActionError(err, errorId);
      return null;
    }
  }

  /** Start polling a job: immediate refresh, then one request per interval. */
  track(id: string): void {
    void this.refreshJob(id);
    const timer = setInterval(() => void this.refreshJob(id), this.pollIntervalMs);
    this.timers.set(id, timer);
  }

  private stopTracking(id: string): void {
    const timer = this.timers.get(id);
    if (timer !== undefined) {
      clearInterval(timer);
      this.timers.delete(id);
    }
  }

  async refreshJob(id: string): Promise<void> {
    let snapshot: JobSnapshot;
    try {
      snapshot = await this.api.job(id);
    } catch (err) {
      if (err instanceof ConnectionError) {
        this.el("conn-message").textContent = err.message;
        this.el("conn-banner").hidden = false;
        return;
      }
      this.stopTracking(id);
      throw err;
    }
    this.state.upsertJob(snapshot);
    const terminal =
      snapshot.state === "done" ||
      snapshot.state === "failed" ||
      snapshot.state === "cancelled";
    if (terminal) {
      this.stopTracking(id);
    }
    if (snapshot.state === "done" && !this.results.has(id)) {
      this.results.set(id, await this.api.result(id));
    }
    if (this.selected === id) {
      this.renderSelected();
    }
  }

  async cancel(id: string): Promise<void> {
    try {
      const snapshot = await this.api.cancelJob(id);
      this.state.upsertJob(snapshot);
    } catch (err) {
      if (!(err instanceof ApiError)) {
        throw err;
      }
    }
  }

  /** True while any job poll timer is armed. */
  get polling(): boolean {
    return this.timers.size > 0;
  }

  // ------------------------------------------------------------- rendering

  private renderJobs(): void {
    const list = this.el("jobs-list");
    list.innerHTML = "";
    for (const job of this.state.jobs) {
      const item = this.doc.createElement("li");
      item.dataset.job = job.id;
      item.dataset.state = job.state;
      if (job.id === this.selected) {
        item.classList.add("selected");
      }
      const label = this.doc.createElement("span");
      const fraction = job.progress.fraction;
      const pct =
        job.state === "running" && typeof fraction === "number"
          ? ` (${Math.round(fraction * 100)}%)`
          : "";
      label.textContent = `${job.kind} ${job.id.slice(0, 8)} — ${job.state}${pct}`;
      label.addEventListener("click", () => this.selectJob(job.id));
      item.appendChild(label);
      if (job.state === "queued" || job.state === "running") {
        const cancelBtn = this.doc.createElement("button");
        cancelBtn.type = "button";
        cancelBtn.textContent = "cancel";
        cancelBtn.dataset.cancel = job.id;
        cancelBtn.addEventListener("click", (event) => {
          event.stopPropagation();
          void this.cancel(job.id);
        });
        item.appendChild(cancelBtn);
      }
      list.appendChild(item);
    }
  }

  selectJob(id: string): void {
    this.selected = id;
    this.renderJobs();
    this.renderSelected();
  }

  /** Re-render the selected job's view from stashed data (no requests). */
  renderSelected(): void {
    const view = this.el("result-view");
    view.innerHTML = "";
    const id = this.selected;
    if (!id) {
      return;
    }
    const job = this.state.job(id);
    if (!job) {
      return;
    }
    const result = this.results.get(id);
    if (job.state === "done" && result !== undefined) {
      if (job.kind === "simulate") {
        this.renderSimulateView(view, id, result as SimulateResultJson);
      } else if (job.kind === "estimate") {
        this.renderEstimateView(view, id, result as EstimateResultJson);
      } else {
        this.renderSweepView(view, id, result as SweepResultJson);
      }
      return;
    }
    if (job.kind === "estimate" && job.state === "running" && job.progress.trace) {
      this.renderEstimateLive(view, job);
      return;
    }
    const p = this.doc.createElement("p");
    p.className = "placeholder";
    p.textContent =
      job.state === "failed"
        ? `job failed: ${job.error ?? "unknown error"}`
        : `job ${job.state}…`;
    view.appendChild(p);
  }

  private plotControls(onChange: () => void): HTMLElement {
    const controls = this.doc.createElement("div");
    controls.className = "plot-controls";
    const logLabel = this.doc.createElement("label");
    const logBox = this.doc.createElement("input");
    logBox.type = "checkbox";
    logBox.id = "log-scale";
    logBox.checked = this.state.plot.logScale;
    logBox.addEventListener("change", () => {
      this.state.plot.logScale = logBox.checked;
      onChange();
    });
    logLabel.append(logBox, this.doc.createTextNode(" log scale"));
    controls.appendChild(logLabel);
    for (const compartment of COMPARTMENTS) {
      const label = this.doc.createElement("label");
      const box = this.doc.createElement("input");
      box.type = "checkbox";
      box.dataset.compartment = compartment;
      box.checked = this.state.plot.visible[compartment];
      box.addEventListener("change", () => {
        this.state.plot.visible[compartment] = box.checked;
        onChange();
      });
      label.append(box, this.doc.createTextNode(` ${compartment}`));
      controls.appendChild(label);
    }
    return controls;
  }

  private trajectorySeries(trajectory: TrajectoryJson): Series[] {
    const series: Series[] = [
      {
        label: "plasma",
        color: PLASMA_COLOR,
        x: trajectory.time,
        y: trajectory.plasma,
        dashed: true,
      },
    ];
    for (const compartment of COMPARTMENTS) {
      if (this.state.plot.visible[compartment]) {
        series.push({
          label: compartment,
          color: COMPARTMENT_COLORS[compartment],
          x: trajectory.time,
          y: trajectory[compartment],
        });
      }
    }
    return series;
  }

  private downloadButton(
    label: string,
    id: string,
    action: () => Promise<void> | void,
  ): HTMLButtonElement {
    const button = this.doc.createElement("button");
    button.type = "button";
    button.id = id;
    button.textContent = label;
    button.addEventListener("click", () => void action());
    return button;
  }

  private renderSimulateView(
    view: HTMLElement,
    id: string,
    result: SimulateResultJson,
  ): void {
    const heading = this.doc.createElement("h2");
    heading.textContent = "Simulated trajectory";
    view.appendChild(heading);
    view.appendChild(this.plotControls(() => this.renderSelected()));

    const chartBox = this.doc.createElement("div");
    chartBox.id = "simulate-chart";
    const svg = renderLineChart(
      this.trajectorySeries(result.trajectory),
      {
        title: "concentration vs time",
        xLabel: "time (h)",
        yLabel: "concentration (mg/L)",
        logScale: this.state.plot.logScale,
      },
      this.doc,
    );
    chartBox.appendChild(svg);
    view.appendChild(chartBox);

    const table = this.doc.createElement("table");
    table.id = "pk-table";
    const head = this.doc.createElement("tr");
    for (const column of ["compartment", "Cmax", "Tmax", "AUC"]) {
      const th = this.doc.createElement("th");
      th.textContent = column;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of result.pk.compartments) {
      const tr = this.doc.createElement("tr");
      tr.dataset.compartment = row.compartment;
      const name = this.doc.createElement("td");
      name.textContent = row.compartment;
      tr.appendChild(name);
      for (const metric of ["Cmax", "Tmax", "AUC"] as const) {
        const td = this.doc.createElement("td");
        td.dataset.metric = metric;
        td.textContent = String(row[metric]);
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    view.appendChild(table);

    const windowNote = this.doc.createElement("p");
    windowNote.className = "info";
    windowNote.textContent = `metrics over t ∈ [${result.pk.t_start}, ${result.pk.t_end}] h`;
    view.appendChild(windowNote);

    const buttons = this.doc.createElement("div");
    buttons.className = "button-row";
    buttons.appendChild(
      this.downloadButton("Download CSV", "download-simulate-csv", async () => {
        const text = await this.api.resultCsv(id);
        this.sink(`simulate-${id.slice(0, 8)}.csv`, "text/csv", text);
      }),
    );
    buttons.appendChild(
      this.downloadButton("Save chart SVG", "download-simulate-svg", () => {
        this.sink(
          `simulate-${id.slice(0, 8)}.svg`,
          "image/svg+xml",
          chartSvgText(svg),
        );
      }),
    );
    view.appendChild(buttons);
  }

  private traceChart(
    trace: EstimationTrace,
    key: string,
    options: { title: string; color: string; small?: boolean },
  ): SVGSVGElement {
    const y = trace[key] ?? [];
    const logScale = key === "best_loss" && y.every((v) => v > 0);
    return renderLineChart(
      [{ label: key, color: options.color, x: trace.iteration, y }],
      {
        title: options.title,
        xLabel: "iteration",
        yLabel: key,
        logScale,
        width: options.small ? 300 : 640,
        height: options.small ? 160 : 280,
      },
      this.doc,
    );
  }

  private renderEstimateLive(view: HTMLElement, job: JobSnapshot): void {
    const heading = this.doc.createElement("h2");
    heading.textContent = "Estimation in progress";
    view.appendChild(heading);
    const status = this.doc.createElement("p");
    status.id = "estimate-live-status";
    const iteration = job.progress.iteration;
    const best = job.progress.best_loss;
    status.textContent = `iteration ${iteration ?? "?"} · best loss ${best ?? "?"}`;
    view.appendChild(status);
    const trace = job.progress.trace;
    if (trace && trace.iteration.length > 1) {
      const box = this.doc.createElement("div");
      box.id = "estimate-live-chart";
      box.appendChild(
        this.traceChart(trace, "best_loss", {
          title: "best loss so far",
          color: "#d62728",
        }),
      );
      view.appendChild(box);
    }
  }

  private renderEstimateView(
    view: HTMLElement,
    id: string,
    result: EstimateResultJson,
  ): void {
    const heading = this.doc.createElement("h2");
    heading.textContent = "Estimation result";
    view.appendChild(heading);

    const summary = this.doc.createElement("p");
    summary.id = "estimate-summary";
    summary.textContent =
      `best loss ${String(result.best_loss)} · ${result.termination} · ` +
      `${result.iterations} iterations · ${result.evaluations} evaluations · ` +
      `seed ${result.seed}`;
    view.appendChild(summary);

    const table = this.doc.createElement("table");
    table.id = "estimate-table";
    const head = this.doc.createElement("tr");
    for (const column of ["parameter", "value", "estimated"]) {
      const th = this.doc.createElement("th");
      th.textContent = column;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const row of result.parameters) {
      const tr = this.doc.createElement("tr");
      tr.dataset.param = row.name;
      const name = this.doc.createElement("td");
      name.textContent = row.name;
      const value = this.doc.createElement("td");
      value.dataset.metric = "value";
      value.textContent = String(row.value);
      const estimated = this.doc.createElement("td");
      estimated.textContent = row.estimated ? "estimated" : "fixed";
      tr.append(name, value, estimated);
      table.appendChild(tr);
    }
    view.appendChild(table);

    const buttons = this.doc.createElement("div");
    buttons.className = "button-row";
    const adopt = this.doc.createElement("button");
    adopt.type = "button";
    adopt.id = "adopt-estimates";
    adopt.textContent = "Use these values in the parameter form";
    adopt.addEventListener("click", () => {
      this.state.adoptEstimates(result.parameters);
      this.paramForm?.setValues(this.state.paramValues);
    });
    buttons.appendChild(adopt);
    buttons.appendChild(
      this.downloadButton("Download parameters CSV", "download-estimate-csv", async () => {
        const text = await this.api.resultCsv(id);
        this.sink(`estimate-${id.slice(0, 8)}.csv`, "text/csv", text);
      }),
    );
    buttons.appendChild(
      this.downloadButton("Download trace CSV", "download-trace-csv", async () => {
        const text = await this.api.traceCsv(id);
        this.sink(`estimate-${id.slice(0, 8)}-trace.csv`, "text/csv", text);
      }),
    );
    view.appendChild(buttons);

    const charts = this.doc.createElement("div");
    charts.id = "estimate-trace-charts";
    charts.appendChild(
      this.traceChart(result.trace, "best_loss", {
        title: "best loss by iteration",
        color: "#d62728",
      }),
    );
    const names = Object.keys(result.trace).filter(
      (key) => key !== "iteration" && key !== "best_loss",
    );
    names.forEach((name, i) => {
      charts.appendChild(
        this.traceChart(result.trace, name, {
          title: name,
          color: SWEEP_PALETTE[(i + 1) % SWEEP_PALETTE.length]!,
          small: true,
        }),
      );
    });
    view.appendChild(charts);
  }

  private renderSweepView(
    view: HTMLElement,
    id: string,
    result: SweepResultJson,
  ): void {
    const heading = this.doc.createElement("h2");
    heading.textContent = `Sensitivity sweep: ${result.parameter}`;
    view.appendChild(heading);
    view.appendChild(this.plotControls(() => this.renderSelected()));

    const note = this.doc.createElement("p");
    note.className = "info";
    note.textContent = `${result.curves.length} curves · ${result.n_integrations} integrations`;
    view.appendChild(note);

    const table = this.doc.createElement("table");
    table.id = "sweep-coefficients";
    const head = this.doc.createElement("tr");
    for (const column of ["compartment", "sensitivity coefficient"]) {
      const th = this.doc.createElement("th");
      th.textContent = column;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const [compartment, value] of Object.entries(result.coefficients)) {
      const tr = this.doc.createElement("tr");
      tr.dataset.compartment = compartment;
      const name = this.doc.createElement("td");
      name.textContent = compartment;
      const cell = this.doc.createElement("td");
      cell.dataset.metric = "coefficient";
      cell.textContent = value === null ? "n/a" : String(value);
      tr.append(name, cell);
      table.appendChild(tr);
    }
    view.appendChild(table);

    const charts = this.doc.createElement("div");
    charts.id = "sweep-charts";
    const svgs: SVGSVGElement[] = [];
    for (const compartment of COMPARTMENTS) {
      if (!this.state.plot.visible[compartment]) {
        continue;
      }
      const series: Series[] = result.curves.map((curve, i) => ({
        label: `×${curve.multiplier}`,
        color: SWEEP_PALETTE[i % SWEEP_PALETTE.length]!,
        x: curve.trajectory.time,
        y: curve.trajectory[compartment],
      }));
      const svg = renderLineChart(
        series,
        {
          title: `${compartment} under ${result.parameter} scaling`,
          xLabel: "time (h)",
          yLabel: compartment,
          logScale: this.state.plot.logScale,
          width: 460,
          height: 220,
        },
        this.doc,
      );
      svgs.push(svg);
      const box = this.doc.createElement("div");
      box.className = "sweep-chart";
      box.dataset.compartment = compartment;
      box.appendChild(svg);
      charts.appendChild(box);
    }
    view.appendChild(charts);

    const buttons = this.doc.createElement("div");
    buttons.className = "button-row";
    buttons.appendChild(
      this.downloadButton("Download CSV", "download-sweep-csv", async () => {
        const text = await this.api.resultCsv(id);
        this.sink(`sweep-${id.slice(0, 8)}.csv`, "text/csv", text);
      }),
    );
    buttons.appendChild(
      this.downloadButton("Save charts SVG", "download-sweep-svg", () => {
        svgs.forEach((svg, i) => {
          this.sink(
            `sweep-${id.slice(0, 8)}-${i}.svg`,
            "image/svg+xml",
            chartSvgText(svg),
          );
        });
      }),
    );
    view.appendChild(buttons);
  }

  // ---------------------------------------------------------------- errors

  private handleActionError(err: unknown, errorId: string): void {
    if (err instanceof ConnectionError) {
      this.el("conn-message").textContent = err.message;
      this.el("conn-banner").hidden = false;
      this.el(errorId).textContent = "service unreachable";
      return;
    }
    if (err instanceof ApiError) {
      const { message, row, column } = err.detail;
      if (
        typeof column === "string" &&
        this.paramForm?.markServerError(column, message ?? "rejected") &&
        errorId !== "data-error"
      ) {
        this.el(errorId).textContent = "a parameter value was rejected";
        return;
      }
      const where =
        row !== null && row !== undefined
          ? ` (row ${row}${column !== null && column !== undefined ? `, column ${column}` : ""})`
          : "";
      this.el(errorId).textContent = `${message ?? "request rejected"}${where}`;
      return;
    }
    throw err;
  }
}
