import {
  ConflictError,
  ExpandResponse,
  TreeResponse,
  UnitDetail,
} from "./types.js";

/** What the app needs from a backend; tests substitute a fake. */
export interface SessionApi {
  getTree(sessionId: string): Promise<TreeResponse>;
  getUnit(sessionId: string, path: string): Promise<UnitDetail>;
  postExpand(sessionId: string, path: string): Promise<ExpandResponse>;
}

export class HttpSessionApi implements SessionApi {
  constructor(private baseUrl: string = "") {}

  async createSession(configPath: string): Promise<string> {
    const body = await this.request(`/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ config_path: configPath }),
    });
    return (body as { session_id: string }).session_id;
  }

  getTree(sessionId: string): Promise<TreeResponse> {
    return this.request(`/sessions/${sessionId}/tree`) as Promise<TreeResponse>;
  }

  getUnit(sessionId: string, path: string): Promise<UnitDetail> {
    const enc = encodeURIComponent(path);
    return this.request(`/sessions/${sessionId}/units/${enc}`) as Promise<UnitDetail>;
  }

  async postExpand(sessionId: string, path: string): Promise<ExpandResponse> {
    const enc = encodeURIComponent(path);
    return (await this.request(`/sessions/${sessionId}/units/${enc}/expand`, {
      method: "POST",
    })) as ExpandResponse;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await fetch(this.baseUrl + path, init);
    if (resp.status === 409) {
      const body = (await resp.json()) as { detail?: { revision?: number } };
      throw new ConflictError(body.detail?.revision ?? -1);
    }
    if (!resp.ok) {
      throw new Error(`${init?.method ?? "GET"} ${path} failed: ${resp.status}`);
    }
    return resp.json();
  }
}
