// Typed client for the synthesis API. All parameter bounds, defaults and
// preset values displayed by the UI originate from these responses.

export interface ParamSpec {
  section: string;
  kind: "int" | "float" | "bool" | "str" | "pair" | "floats";
  default: unknown;
  suggested: [number, number] | null;
  choices: string[] | null;
  doc: string;
}

export interface PresetEntry {
  name: string;
  description: string;
  values: Record<string, unknown>;
}

export interface Catalog {
  presets: PresetEntry[];
  parameters: Record<string, ParamSpec>;
}

export interface SynthesizeRequest {
  preset: string | null;
  overrides: Record<string, unknown>;
  n_cycles: number | null;
  seed: number | null;
}

export interface Curve {
  lag?: number[];
  value?: number[];
  freq?: number[];
  db?: number[];
  db_std?: number[];
}

export interface SynthesizeResponse {
  fs: number;
  seed: number;
  truncated: boolean;
  mixture: number[];
  envelope: number[];
  psd: { freq: number[]; db: number[]; db_std: number[] };
  acf: { lag: number[]; value: number[] };
  annotations: Record<string, unknown>;
}

export interface FieldError {
  field: string | null;
  message: string;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number,
              readonly fieldError: FieldError | null = null) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(private readonly base: string = "",
              private readonly fetchFn: FetchLike = (u, i) => fetch(u, i)) {}

  async presets(): Promise<Catalog> {
    const resp = await this.fetchFn(`${this.base}/presets`);
    if (!resp.ok) {
      throw new ApiError(`catalog request failed (${resp.status})`, resp.status);
    }
    return (await resp.json()) as Catalog;
  }

  async synthesize(request: SynthesizeRequest): Promise<SynthesizeResponse> {
    const resp = await this.fetchFn(`${this.base}/synthesize`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!resp.ok) {
      const fieldError = await extractFieldError(resp);
      throw new ApiError(fieldError?.message ?? `synthesis failed (${resp.status})`,
                         resp.status, fieldError);
    }
    return (await resp.json()) as SynthesizeResponse;
  }
}

async function extractFieldError(resp: Response): Promise<FieldError | null> {
  try {
    const body = await resp.json();
    if (body && typeof body === "object" && "detail" in body) {
      const detail = (body as { detail: unknown }).detail;
      if (detail && typeof detail === "object" && "message" in (detail as object)) {
        const d = detail as { field?: string | null; message: string };
        return { field: d.field ?? null, message: d.message };
      }
      return { field: null, message: JSON.stringify(detail) };
    }
    if (body && typeof body === "object" && "error" in body) {
      const err = (body as { error: { stage?: string; message?: string } }).error;
      return { field: null, message: `${err.stage ?? "server"}: ${err.message ?? ""}` };
    }
  } catch {
    /* non-JSON error body */
  }
  return null;
}
