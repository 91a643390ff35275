/** Typed client for the workspace service. Every view renders wire data
 *  verbatim; nothing in the UI recomputes what the service already said. */

export interface Diagnostic {
  code: string;
  message: string;
  line: number;
  col: number;
}

export interface StageReport {
  name: string;
  status: string;
  diagnostics?: Diagnostic[];
  [extra: string]: unknown;
}

export interface BuildReport {
  ok: boolean;
  subfases: StageReport[];
}

export interface TokenRow {
  kind: string;
  lexeme: string;
  line: number;
  col: number;
}

export type StatusMap = Record<string, string>;

export interface WorkspaceEntry {
  id: string;
  name: string;
}

export interface WorkspaceOverview extends WorkspaceEntry {
  slots: Record<string, boolean>;
  status: StatusMap;
}

export interface ArtifactView {
  subfase: string;
  status: string;
  payload: Record<string, unknown> | null;
}

export interface SessionState {
  pc: number;
  steps: number;
  halted: boolean;
  trap: string | null;
  trap_message: string | null;
  stack: number[];
  memory: Record<string, number>;
  changed_cells: Record<string, number>;
  output: string;
  output_delta: string;
  input_pending: string[];
  trace_len: number;
  trace_truncated: boolean;
}

export interface StepRecordRow {
  step: number;
  pc: number;
  instr: string;
  stack: number[];
  out?: string;
  read?: number;
}

export interface StepResponse {
  records: StepRecordRow[];
  state: SessionState;
}

export interface SessionOpened {
  id: string;
  workspace: string;
  state: SessionState;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    subfases?: string[];
  };
}

/** Status code plus parsed body; callers branch on `status`. */
export interface ApiReply<T> {
  status: number;
  body: T;
}

export const SPEC_SLOTS = ["scanner", "parser", "contrainer", "generator"] as const;
export type SpecSlot = (typeof SPEC_SLOTS)[number];

export class Api {
  constructor(private base: string = "") {}

  private async request(method: string, path: string, payload?: unknown,
                        rawText?: string): Promise<{ status: number; text: string }> {
    const init: RequestInit = { method };
    if (rawText !== undefined) {
      init.body = rawText;
      init.headers = { "Content-Type": "text/plain; charset=utf-8" };
    } else if (payload !== undefined) {
      init.body = JSON.stringify(payload);
      init.headers = { "Content-Type": "application/json" };
    }
    const response = await fetch(this.base + path, init);
    const text = await response.text();
    return { status: response.status, text };
  }

  private async json<T>(method: string, path: string,
                        payload?: unknown): Promise<ApiReply<T>> {
    const got = await this.request(method, path, payload);
    const body = got.text === "" ? null : JSON.parse(got.text);
    return { status: got.status, body: body as T };
  }

  listWorkspaces() {
    return this.json<WorkspaceEntry[]>("GET", "/workspaces");
  }

  createWorkspace(name: string) {
    return this.json<WorkspaceOverview>("POST", "/workspaces", { name });
  }

  workspace(id: string) {
    return this.json<WorkspaceOverview>("GET", `/workspaces/${id}`);
  }

  status(id: string) {
    return this.json<StatusMap>("GET", `/workspaces/${id}/status`);
  }

  async getSpec(id: string, slot: SpecSlot): Promise<ApiReply<string | null>> {
    const got = await this.request("GET", `/workspaces/${id}/specs/${slot}`);
    return { status: got.status, body: got.status === 200 ? got.text : null };
  }

  putSpec(id: string, slot: SpecSlot, text: string) {
    return this.request("PUT", `/workspaces/${id}/specs/${slot}`, undefined, text);
  }

  async getSource(id: string): Promise<ApiReply<string | null>> {
    const got = await this.request("GET", `/workspaces/${id}/source`);
    return { status: got.status, body: got.status === 200 ? got.text : null };
  }

  putSource(id: string, text: string) {
    return this.request("PUT", `/workspaces/${id}/source`, undefined, text);
  }

  compile(id: string) {
    return this.json<BuildReport>("POST", `/workspaces/${id}/compile`);
  }

  run(id: string, optimize: boolean) {
    return this.json<BuildReport | ErrorBody>("POST", `/workspaces/${id}/run`,
                                              { optimize });
  }

  artifact(id: string, stage: string) {
    return this.json<ArtifactView>("GET", `/workspaces/${id}/artifacts/${stage}`);
  }

  openSession(id: string, input: string) {
    return this.json<SessionOpened | ErrorBody>(
      "POST", `/workspaces/${id}/sessions`, { input });
  }

  step(sessionId: string, n: number) {
    return this.json<StepResponse | ErrorBody>(
      "POST", `/sessions/${sessionId}/step`, { n });
  }

  feed(sessionId: string, integers: number[]) {
    return this.json<{ state: SessionState } | ErrorBody>(
      "POST", `/sessions/${sessionId}/input`, { integers });
  }

  reset(sessionId: string) {
    return this.json<{ state: SessionState } | ErrorBody>(
      "POST", `/sessions/${sessionId}/reset`);
  }

  closeSession(sessionId: string) {
    return this.request("DELETE", `/sessions/${sessionId}`);
  }
}

export function isError(body: unknown): body is ErrorBody {
  return typeof body === "object" && body !== null && "error" in body;
}
