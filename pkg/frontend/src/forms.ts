/**
 * Sidebar forms: parameters, estimation bounds, sweep setup.
 *
 * Each form validates client-side against the ranges served by
 * GET /manifest before anything is submitted; server 422s are rendered
 * inline at the offending field on top of that.
 */

import type { BoundsRowBody, DeBody, ManifestRow, SweepBody } from "./api.js";

/** Parse one field against its manifest row; returns a value or an error. */
export function validateParamInput(
  row: ManifestRow,
  raw: string,
): { value?: number; error?: string } {
  const text = raw.trim();
  if (text === "") {
    return { error: "enter a number" };
  }
  const value = Number(text);
  if (!Number.isFinite(value)) {
    return { error: "not a number" };
  }
  if (value < row.min || value > row.max) {
    return {
      error: `must lie in [${row.min}, ${row.max}] ${row.unit}`,
    };
  }
  return { value };
}

function fieldError(doc: Document): HTMLSpanElement {
  const span = doc.createElement("span");
  span.className = "field-error";
  return span;
}

export class ParameterForm {
  private readonly inputs = new Map<string, HTMLInputElement>();
  private readonly errors = new Map<string, HTMLSpanElement>();
  private readonly rows: ManifestRow[];

  constructor(
    container: HTMLElement,
    manifest: ManifestRow[],
    initial: Record<string, number>,
  ) {
    this.rows = manifest;
    const doc = container.ownerDocument;
    for (const row of manifest) {
      const field = doc.createElement("div");
      field.className = "form-field";

      const label = doc.createElement("label");
      label.textContent = row.name;
      label.title = `${row.description} [${row.min}, ${row.max}] ${row.unit}`;
      label.htmlFor = `param-${row.name}`;

      const input = doc.createElement("input");
      input.type = "text";
      input.id = `param-${row.name}`;
      input.dataset.param = row.name;
      input.value = String(initial[row.name] ?? row.ref_value);

      const unit = doc.createElement("span");
      unit.className = "unit";
      unit.textContent = row.unit;

      const error = fieldError(doc);
      input.addEventListener("input", () => this.validateField(row.name));

      field.append(label, input, unit, error);
      container.appendChild(field);
      this.inputs.set(row.name, input);
      this.errors.set(row.name, error);
    }
  }

  private rowFor(name: string): ManifestRow | undefined {
    return this.rows.find((r) => r.name === name);
  }

  validateField(name: string): string | undefined {
    const row = this.rowFor(name);
    const input = this.inputs.get(name);
    const error = this.errors.get(name);
    if (!row || !input || !error) {
      return undefined;
    }
    const checked = validateParamInput(row, input.value);
    error.textContent = checked.error ?? "";
    return checked.error;
  }

  /** Validate everything; returns the values or null if any field is bad. */
  read(): Record<string, number> | null {
    const values: Record<string, number> = {};
    let ok = true;
    for (const row of this.rows) {
      const input = this.inputs.get(row.name)!;
      const checked = validateParamInput(row, input.value);
      this.errors.get(row.name)!.textContent = checked.error ?? "";
      if (checked.error !== undefined || checked.value === undefined) {
        ok = false;
      } else {
        values[row.name] = checked.value;
      }
    }
    return ok ? values : null;
  }

  /** Write values into the inputs (adopt-estimates lands here). */
  setValues(values: Record<string, number>): void {
    for (const [name, value] of Object.entries(values)) {
      const input = this.inputs.get(name);
      if (input) {
        input.value = String(value);
        this.validateField(name);
      }
    }
  }

  value(name: string): string {
    return this.inputs.get(name)?.value ?? "";
  }

  /** Render a server-reported problem at the named field. */
  markServerError(name: string, message: string): boolean {
    const error = this.errors.get(name);
    if (!error) {
      return false;
    }
    error.textContent = message;
    return true;
  }

  clearErrors(): void {
    for (const error of this.errors.values()) {
      error.textContent = "";
    }
  }
}

export type BoundsMode = "fixed" | "estimate";

export class BoundsForm {
  private readonly modes = new Map<string, HTMLSelectElement>();
  private readonly mins = new Map<string, HTMLInputElement>();
  private readonly maxs = new Map<string, HTMLInputElement>();
  private readonly fixeds = new Map<string, HTMLInputElement>();
  private readonly errors = new Map<string, HTMLSpanElement>();
  private readonly rows: ManifestRow[];

  constructor(
    container: HTMLElement,
    manifest: ManifestRow[],
    initial: Record<string, number>,
  ) {
    this.rows = manifest;
    const doc = container.ownerDocument;
    for (const row of manifest) {
      const field = doc.createElement("div");
      field.className = "form-field bounds-field";

      const label = doc.createElement("label");
      label.textContent = row.name;
      label.title = row.description;

      const mode = doc.createElement("select");
      mode.dataset.boundsMode = row.name;
      for (const kind of ["fixed", "estimate"] as const) {
        const option = doc.createElement("option");
        option.value = kind;
        option.textContent = kind;
        mode.appendChild(option);
      }

      const fixed = doc.createElement("input");
      fixed.type = "text";
      fixed.dataset.boundsFixed = row.name;
      fixed.value = String(initial[row.name] ?? row.ref_value);
      fixed.placeholder = "value";

      const min = doc.createElement("input");
      min.type = "text";
      min.dataset.boundsMin = row.name;
      min.placeholder = "min";
      min.style.display = "none";

      const max = doc.createElement("input");
      max.type = "text";
      max.dataset.boundsMax = row.name;
      max.placeholder = "max";
      max.style.display = "none";

      mode.addEventListener("change", () => {
        const estimating = mode.value === "estimate";
        fixed.style.display = estimating ? "none" : "";
        min.style.display = estimating ? "" : "none";
        max.style.display = estimating ? "" : "none";
      });

      const error = fieldError(doc);
      field.append(label, mode, fixed, min, max, error);
      container.appendChild(field);
      this.modes.set(row.name, mode);
      this.mins.set(row.name, min);
      this.maxs.set(row.name, max);
      this.fixeds.set(row.name, fixed);
      this.errors.set(row.name, error);
    }
  }

  setMode(name: string, mode: BoundsMode): void {
    const select = this.modes.get(name);
    if (select) {
      select.value = mode;
      select.dispatchEvent(new Event("change"));
    }
  }

  setRange(name: string, min: string, max: string): void {
    this.setMode(name, "estimate");
    this.mins.get(name)!.value = min;
    this.maxs.get(name)!.value = max;
  }

  setFixed(name: string, value: string): void {
    this.setMode(name, "fixed");
    this.fixeds.get(name)!.value = value;
  }

  /** Validate against the manifest; null (with inline errors) when bad. */
  read(): BoundsRowBody[] | null {
    const rows: BoundsRowBody[] = [];
    let ok = true;
    let estimating = 0;
    for (const row of this.rows) {
      const error = this.errors.get(row.name)!;
      error.textContent = "";
      if (this.modes.get(row.name)!.value === "estimate") {
        estimating += 1;
        const minChecked = validateParamInput(row, this.mins.get(row.name)!.value);
        const maxChecked = validateParamInput(row, this.maxs.get(row.name)!.value);
        if (minChecked.error !== undefined) {
          error.textContent = `min: ${minChecked.error}`;
          ok = false;
          continue;
        }
        if (maxChecked.error !== undefined) {
          error.textContent = `max: ${maxChecked.error}`;
          ok = false;
          continue;
        }
        if (!(minChecked.value! < maxChecked.value!)) {
          error.textContent = "min must be below max";
          ok = false;
          continue;
        }
        rows.push({ name: row.name, min: minChecked.value!, max: maxChecked.value! });
      } else {
        const checked = validateParamInput(row, this.fixeds.get(row.name)!.value);
        if (checked.error !== undefined) {
          error.textContent = checked.error;
          ok = false;
          continue;
        }
        rows.push({ name: row.name, fixed_value: checked.value! });
      }
    }
    if (estimating === 0) {
      this.errors.get(this.rows[0]!.name)!.textContent =
        "mark at least one parameter as estimate";
      ok = false;
    }
    return ok ? rows : null;
  }

  markServerError(name: string, message: string): boolean {
    const error = this.errors.get(name);
    if (!error) {
      return false;
    }
    error.textContent = message;
    return true;
  }
}

export class SweepForm {
  readonly parameterSelect: HTMLSelectElement;
  readonly multipliersInput: HTMLInputElement;
  private readonly error: HTMLSpanElement;
  private readonly rows: ManifestRow[];

  constructor(container: HTMLElement, manifest: ManifestRow[]) {
    this.rows = manifest;
    const doc = container.ownerDocument;

    const pickField = doc.createElement("div");
    pickField.className = "form-field";
    const pickLabel = doc.createElement("label");
    pickLabel.textContent = "parameter";
    this.parameterSelect = doc.createElement("select");
    this.parameterSelect.id = "sweep-parameter";
    for (const row of manifest) {
      const option = doc.createElement("option");
      option.value = row.name;
      option.textContent = row.name;
      this.parameterSelect.appendChild(option);
    }
    pickField.append(pickLabel, this.parameterSelect);

    const multField = doc.createElement("div");
    multField.className = "form-field";
    const multLabel = doc.createElement("label");
    multLabel.textContent = "multipliers";
    this.multipliersInput = doc.createElement("input");
    this.multipliersInput.type = "text";
    this.multipliersInput.id = "sweep-multipliers";
    this.multipliersInput.value = "0.1, 0.5, 1, 2, 10";
    this.error = fieldError(doc);
    multField.append(multLabel, this.multipliersInput, this.error);

    container.append(pickField, multField);
  }

  /**
   * Validate and read the sweep request; checks each scaled value against
   * the manifest range for the picked parameter, mirroring the server.
   */
  read(baseValue: number): SweepBody | null {
    this.error.textContent = "";
    const name = this.parameterSelect.value;
    const row = this.rows.find((r) => r.name === name);
    if (!row) {
      this.error.textContent = "pick a parameter";
      return null;
    }
    const tokens = this.multipliersInput.value
      .split(",")
      .map((t) => t.trim())
      .filter((t) => t !== "");
    if (tokens.length === 0) {
      this.error.textContent = "give at least one multiplier";
      return null;
    }
    const multipliers: number[] = [];
    for (const token of tokens) {
      const m = Number(token);
      if (!Number.isFinite(m) || m <= 0) {
        this.error.textContent = `multiplier ${token} must be a positive number`;
        return null;
      }
      const scaled = baseValue * m;
      if (scaled < row.min || scaled > row.max) {
        this.error.textContent =
          `x${token} puts ${name} at ${scaled}, outside [${row.min}, ${row.max}]`;
        return null;
      }
      multipliers.push(m);
    }
    return { parameter: name, multipliers };
  }

  markError(message: string): void {
    this.error.textContent = message;
  }
}

/** Optional differential-evolution settings (blank fields mean defaults). */
export class EstimationOptionsForm {
  private readonly inputs = new Map<keyof DeBody, HTMLInputElement>();
  private readonly error: HTMLSpanElement;

  constructor(container: HTMLElement) {
    const doc = container.ownerDocument;
    const fields: Array<[keyof DeBody, string]> = [
      ["np", "population"],
      ["max_iter", "iterations"],
      ["seed", "seed"],
      ["f", "weight F"],
      ["cr", "crossover"],
      ["vtr", "stop at loss"],
    ];
    for (const [key, label] of fields) {
      const field = doc.createElement("div");
      field.className = "form-field";
      const labelEl = doc.createElement("label");
      labelEl.textContent = label;
      const input = doc.createElement("input");
      input.type = "text";
      input.dataset.de = key;
      input.placeholder = "default";
      field.append(labelEl, input);
      container.appendChild(field);
      this.inputs.set(key, input);
    }
    this.error = fieldError(doc);
    container.appendChild(this.error);
  }

  set(key: keyof DeBody, value: string): void {
    this.inputs.get(key)!.value = value;
  }

  read(): DeBody | null {
    this.error.textContent = "";
    const body: DeBody = {};
    for (const [key, input] of this.inputs.entries()) {
      const text = input.value.trim();
      if (text === "") {
        continue;
      }
      const value = Number(text);
      if (!Number.isFinite(value)) {
        this.error.textContent = `${key} is not a number`;
        return null;
      }
      body[key] = value;
    }
    return body;
  }
}
