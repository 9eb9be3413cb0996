/**
 * Typed client for the workbench HTTP service.
 *
 * Every request/response pair is appended to `log`, so tests can assert
 * exactly what went over the wire (and that nothing extra did).
 */

export interface ManifestRow {
  name: string;
  description: string;
  unit: string;
  ref_value: number;
  min: number;
  max: number;
}

export interface DatasetInfo {
  id: string;
  rows: number;
  columns: string[];
  parameters: Record<string, number>;
}

export type JobKind = "simulate" | "sweep" | "estimate";
export type JobState = "queued" | "running" | "done" | "failed" | "cancelled";

export interface EstimationTrace {
  iteration: number[];
  best_loss: number[];
  [parameter: string]: number[];
}

export interface JobProgress {
  fraction?: number;
  iteration?: number;
  best_loss?: number;
  trace?: EstimationTrace;
}

export interface JobSnapshot {
  id: string;
  kind: JobKind;
  state: JobState;
  progress: JobProgress;
  submitted: number;
  finished: number | null;
  error: string | null;
}

export interface TrajectoryJson {
  time: number[];
  plasma: number[];
  Cbb: number[];
  Cbm: number[];
  Cccsf: number[];
  Cscsf: number[];
}

export interface PkRowJson {
  compartment: string;
  Cmax: number;
  Tmax: number;
  AUC: number;
}

export interface PkJson {
  t_start: number;
  t_end: number;
  compartments: PkRowJson[];
}

export interface SimulateResultJson {
  trajectory: TrajectoryJson;
  pk: PkJson;
}

export interface SweepCurveJson {
  multiplier: number;
  value: number;
  trajectory: TrajectoryJson;
  pk: PkJson;
}

export interface SweepResultJson {
  parameter: string;
  n_integrations: number;
  coefficients: Record<string, number | null>;
  curves: SweepCurveJson[];
}

export interface EstimatedParameterJson {
  name: string;
  value: number;
  estimated: boolean;
}

export interface EstimateResultJson {
  parameters: EstimatedParameterJson[];
  best_loss: number;
  termination: string;
  evaluations: number;
  iterations: number;
  seed: number;
  trace: EstimationTrace;
}

export interface BoundsRowBody {
  name: string;
  min?: number;
  max?: number;
  fixed_value?: number;
}

export interface SweepBody {
  parameter: string;
  multipliers?: number[];
}

export interface DeBody {
  np?: number;
  f?: number;
  cr?: number;
  max_iter?: number;
  vtr?: number;
  seed?: number;
}

export interface JobRequestBody {
  kind: JobKind;
  dataset_id: string;
  params?: Record<string, number>;
  sweep?: SweepBody;
  bounds?: BoundsRowBody[];
  de?: DeBody;
  grid?: number;
  output_times?: number[];
}

/** One entry of the wire log kept by the client. */
export interface RequestRecord {
  method: string;
  path: string;
  body: unknown;
  status: number;
  response: unknown;
}

interface ServerErrorDetail {
  message?: string;
  type?: string;
  row?: number | null;
  column?: string | number | null;
}

/** Non-2xx response; `detail` carries the server's structured explanation. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: ServerErrorDetail;

  constructor(status: number, detail: ServerErrorDetail) {
    super(detail.message ?? `request failed with status ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

/** The service could not be reached at all (network refused / dropped). */
export class ConnectionError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "ConnectionError";
  }
}

function normalizeDetail(status: number, payload: unknown): ServerErrorDetail {
  if (payload && typeof payload === "object" && "detail" in payload) {
    const detail = (payload as { detail: unknown }).detail;
    if (typeof detail === "string") {
      return { message: detail };
    }
    if (Array.isArray(detail)) {
      // request-model validation: [{loc, msg, type}, ...]
      const first = detail[0] as { loc?: unknown[]; msg?: string } | undefined;
      const where = first?.loc ? ` (${first.loc.join(".")})` : "";
      return { message: `${first?.msg ?? "invalid request"}${where}` };
    }
    if (detail && typeof detail === "object") {
      return detail as ServerErrorDetail;
    }
  }
  return { message: `request failed with status ${status}` };
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class WorkbenchApi {
  readonly baseUrl: string;
  readonly log: RequestRecord[] = [];
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    const impl = fetchImpl ?? (globalThis.fetch as FetchLike);
    this.fetchImpl = (input, init) => impl(input, init);
  }

  private async request(
    method: string,
    path: string,
    options: { json?: unknown; text?: string; asText?: boolean } = {},
  ): Promise<unknown> {
    const init: RequestInit = { method };
    if (options.json !== undefined) {
      init.body = JSON.stringify(options.json);
      init.headers = { "content-type": "application/json" };
    } else if (options.text !== undefined) {
      init.body = options.text;
      init.headers = { "content-type": "text/csv" };
    }
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new ConnectionError(cause);
    }
    const raw = await response.text();
    let payload: unknown = raw;
    if (!options.asText || !response.ok) {
      try {
        payload = raw === "" ? null : JSON.parse(raw);
      } catch {
        payload = raw;
      }
    }
    this.log.push({
      method,
      path,
      body: options.json ?? (options.text !== undefined ? "<csv upload>" : null),
      status: response.status,
      response: options.asText && response.ok ? "<csv download>" : payload,
    });
    if (!response.ok) {
      throw new ApiError(response.status, normalizeDetail(response.status, payload));
    }
    return options.asText ? raw : payload;
  }

  ping(): Promise<unknown> {
    return this.request("GET", "/");
  }

  manifest(): Promise<ManifestRow[]> {
    return this.request("GET", "/manifest") as Promise<ManifestRow[]>;
  }

  sampleCsv(): Promise<string> {
    return this.request("GET", "/sample.csv", { asText: true }) as Promise<string>;
  }

  uploadDataset(csvText: string): Promise<DatasetInfo> {
    return this.request("POST", "/datasets", {
      text: csvText,
    }) as Promise<DatasetInfo>;
  }

  async submitJob(body: JobRequestBody): Promise<string> {
    const created = (await this.request("POST", "/jobs", { json: body })) as {
      id: string;
    };
    return created.id;
  }

  job(id: string): Promise<JobSnapshot> {
    return this.request("GET", `/jobs/${id}`) as Promise<JobSnapshot>;
  }

  result(id: string): Promise<unknown> {
    return this.request("GET", `/jobs/${id}/result`);
  }

  resultCsv(id: string): Promise<string> {
    return this.request("GET", `/jobs/${id}/result.csv`, {
      asText: true,
    }) as Promise<string>;
  }

  traceCsv(id: string): Promise<string> {
    return this.request("GET", `/jobs/${id}/result.trace.csv`, {
      asText: true,
    }) as Promise<string>;
  }

  cancelJob(id: string): Promise<JobSnapshot> {
    return this.request("DELETE", `/jobs/${id}`) as Promise<JobSnapshot>;
  }
}
