// Thin typed client over the warehouse HTTP API. All views go through this
// module, so the parity tests can drive the exact same code paths the UI
// uses in the browser.

import type {
  ApplyResult,
  ApiErrorBody,
  CubeRendering,
  McaResult,
  ModelInfo,
  OpacResult,
  RuleBody,
  RulesMiningResult,
  ValidationReport,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly where?: string;

  constructor(code: string, message: string, where?: string) {
    super(message);
    this.code = code;
    this.where = where;
  }
}

export type OperatorRequest =
  | { op: "roll-up" | "drill-down"; dimension: string; level: string }
  | { op: "slice"; dimension: string; member: string }
  | { op: "dice"; predicates: Record<string, string[]> }
  | { op: "rotate"; order: number[] }
  | { op: "switch"; dimension: string; members: string[] }
  | { op: "push"; dimension: string }
  | { op: "pull" };

export class Client {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = await response.json();
    if (!response.ok) {
      const err = (body as ApiErrorBody).error;
      if (err && err.code) {
        throw new ApiError(err.code, err.message, err.where);
      }
      throw new ApiError("http-error", `HTTP ${response.status}`);
    }
    return body as T;
  }

  getModel(): Promise<ModelInfo> {
    return this.request("/model");
  }

  createCube(spec: {
    axes: { dimension: string; level: string }[];
    measure: string;
    aggregate?: string;
  }): Promise<CubeRendering> {
    return this.request("/cubes", { method: "POST", body: JSON.stringify(spec) });
  }

  getCube(id: string): Promise<CubeRendering> {
    return this.request(`/cubes/${id}`);
  }

  operate(id: string, op: OperatorRequest): Promise<CubeRendering> {
    return this.request(`/cubes/${id}/op`, {
      method: "POST",
      body: JSON.stringify(op),
    });
  }

  validateRules(body: RuleBody | { text: string }): Promise<ValidationReport> {
    return this.request("/rules/validate", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  applyRules(body: RuleBody | { text: string }, dryRun = false): Promise<ApplyResult> {
    const query = dryRun ? "?dry_run=true" : "";
    return this.request(`/rules/apply${query}`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  mineOpac(body: {
    cube: string;
    dimension: string;
    linkage?: string;
    k?: number;
    names?: string[];
    target_level?: string;
    target_attribute?: string;
  }): Promise<OpacResult> {
    return this.request("/mine/opac", { method: "POST", body: JSON.stringify(body) });
  }

  mineMca(body: { cube: string }): Promise<McaResult> {
    return this.request("/mine/mca", { method: "POST", body: JSON.stringify(body) });
  }

  mineRules(body: {
    meta: unknown;
    min_support: number;
    min_confidence: number;
  }): Promise<RulesMiningResult> {
    return this.request("/mine/rules", { method: "POST", body: JSON.stringify(body) });
  }

  getLog(): Promise<unknown[]> {
    return this.request("/log");
  }
}
