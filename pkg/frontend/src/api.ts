// Typed client for the relit session service. The viewer never shades
// pixels itself; every displayed image comes from these endpoints.

export type SessionStatus = {
  status: "building" | "ready" | "error";
  revision: number;
  frames: number;
  resolution: [number, number];
  error: string | null;
};

export type EditRequest = {
  roughness_set?: number;
  roughness_scale?: number;
  metallic_set?: number;
  albedo_tint?: [number, number, number];
  env_rotation_deg?: number;
  exposure_ev?: number;
};

export type PlaneName = "rgb" | "albedo" | "orm" | "normal";

export type FrameResponse = {
  blob: Blob;
  revision: number | null;
};

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function parseDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return `${resp.status} ${resp.statusText}`;
  }
}

export class RelitClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) throw new ApiError(resp.status, await parseDetail(resp));
    return (await resp.json()) as T;
  }

  createSession(bundlePath: string, envPath: string, mode = "relight") {
    return this.requestJson<{ session_id: string }>("/session", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        bundle_path: bundlePath,
        env_path: envPath,
        mode,
      }),
    });
  }

  status(sessionId: string): Promise<SessionStatus> {
    return this.requestJson<SessionStatus>(`/session/${sessionId}`);
  }

  async fetchFrame(
    sessionId: string,
    index: number,
    width?: number,
  ): Promise<FrameResponse> {
    const params = new URLSearchParams({ index: String(index) });
    if (width !== undefined) params.set("width", String(width));
    const resp = await this.fetchFn(
      `${this.baseUrl}/session/${sessionId}/frame?${params}`,
    );
    if (!resp.ok) throw new ApiError(resp.status, await parseDetail(resp));
    const header = resp.headers.get("X-Relit-Revision");
    return {
      blob: await resp.blob(),
      revision: header === null ? null : Number(header),
    };
  }

  async fetchMaterials(
    sessionId: string,
    index: number,
    plane?: PlaneName,
  ): Promise<Blob> {
    const params = new URLSearchParams({ index: String(index) });
    if (plane) params.set("plane", plane);
    const resp = await this.fetchFn(
      `${this.baseUrl}/session/${sessionId}/materials?${params}`,
    );
    if (!resp.ok) throw new ApiError(resp.status, await parseDetail(resp));
    return resp.blob();
  }

  edit(sessionId: string, edit: EditRequest) {
    return this.requestJson<{ revision: number }>(
      `/session/${sessionId}/edit`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(edit),
      },
    );
  }

  resetEdits(sessionId: string) {
    return this.requestJson<{ revision: number }>(
      `/session/${sessionId}/reset`,
      { method: "POST" },
    );
  }

  rotateEnv(sessionId: string, degrees: number) {
    return this.requestJson<{ revision: number; rebuilding: boolean }>(
      `/session/${sessionId}/env`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ rotation_deg: degrees }),
      },
    );
  }

  swapEnv(sessionId: string, envPath: string) {
    return this.requestJson<{ revision: number; rebuilding: boolean }>(
      `/session/${sessionId}/env`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ env_path: envPath }),
      },
    );
  }
}
