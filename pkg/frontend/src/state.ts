/**
 * Central mutable state of the workbench page.
 *
 * The job list mirrors server truth: `upsertJob` replaces any local entry
 * with the server snapshot wholesale, so the server always wins.
 */

import type {
  DatasetInfo,
  EstimatedParameterJson,
  JobSnapshot,
  ManifestRow,
} from "./api.js";

export type Compartment = "Cbb" | "Cbm" | "Cccsf" | "Cscsf";

export const COMPARTMENTS: Compartment[] = ["Cbb", "Cbm", "Cccsf", "Cscsf"];

export const COMPARTMENT_COLORS: Record<Compartment, string> = {
  Cbb: "#1f77b4",
  Cbm: "#d62728",
  Cccsf: "#2ca02c",
  Cscsf: "#9467bd",
};

export interface PlotState {
  logScale: boolean;
  visible: Record<Compartment, boolean>;
}

export type Listener = () => void;

export class WorkbenchState {
  manifest: ManifestRow[] = [];
  dataset: DatasetInfo | null = null;
  /** Raw text of the uploaded file, kept so its series can be plotted. */
  uploadedCsv: string | null = null;
  /** Parameter form values, name -> value, pre-filled from the manifest. */
  paramValues: Record<string, number> = {};
  jobs: JobSnapshot[] = [];
  plot: PlotState = {
    logScale: false,
    visible: { Cbb: true, Cbm: true, Cccsf: true, Cscsf: true },
  };

  private listeners: Listener[] = [];

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  initFromManifest(rows: ManifestRow[]): void {
    this.manifest = rows;
    this.paramValues = {};
    for (const row of rows) {
      this.paramValues[row.name] = row.ref_value;
    }
    this.notify();
  }

  setDataset(info: DatasetInfo, csvText: string): void {
    this.dataset = info;
    this.uploadedCsv = csvText;
    // a dataset may embed its own parameter table; reflect it in the form
    for (const [name, value] of Object.entries(info.parameters)) {
      if (name in this.paramValues) {
        this.paramValues[name] = value;
      }
    }
    this.notify();
  }

  /** Insert or replace a job entry with the server's snapshot. */
  upsertJob(snapshot: JobSnapshot): void {
    const at = this.jobs.findIndex((j) => j.id === snapshot.id);
    if (at >= 0) {
      this.jobs[at] = snapshot;
    } else {
      this.jobs.unshift(snapshot);
    }
    this.notify();
  }

  job(id: string): JobSnapshot | undefined {
    return this.jobs.find((j) => j.id === id);
  }

  /**
   * Copy a finished estimation's parameter values into the parameter form,
   * so the next sweep or simulation starts from the fitted point.
   */
  adoptEstimates(parameters: EstimatedParameterJson[]): void {
    for (const row of parameters) {
      if (row.name in this.paramValues) {
        this.paramValues[row.name] = row.value;
      }
    }
    this.notify();
  }

  toggleLogScale(): void {
    this.plot.logScale = !this.plot.logScale;
    this.notify();
  }

  setCompartmentVisible(compartment: Compartment, visible: boolean): void {
    this.plot.visible[compartment] = visible;
    this.notify();
  }
}
