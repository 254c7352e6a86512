import { describe, expect, it, vi } from "vitest";

import { ApiError, RelitClient } from "../src/api.js";

function jsonResponse(body: unknown, status = 200, headers: Record<string, string> = {}) {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json", ...headers },
  });
}

describe("RelitClient", () => {
  it("posts session creation with the documented body", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ session_id: "3" }));
    const client = new RelitClient("http://svc", fetchFn as unknown as typeof fetch);
    const result = await client.createSession("/b/bundle.json", "/p/studio.hdr");
    expect(result.session_id).toBe("3");
    const [url, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://svc/session");
    expect(init.method).toBe("POST");
    expect(JSON.parse(String(init.body))).toEqual({
      bundle_path: "/b/bundle.json",
      env_path: "/p/studio.hdr",
      mode: "relight",
    });
  });

  it("builds frame URLs with index and optional width", async () => {
    const png = new Response(new Blob([new Uint8Array([1, 2, 3])]), {
      status: 200,
      headers: { "X-Relit-Revision": "12" },
    });
    const fetchFn = vi.fn(async () => png);
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    const frame = await client.fetchFrame("7", 4, 256);
    expect(fetchFn.mock.calls[0][0]).toBe("/session/7/frame?index=4&width=256");
    expect(frame.revision).toBe(12);
    expect(await frame.blob.arrayBuffer()).toHaveProperty("byteLength", 3);
  });

  it("omits width when not given and parses missing revision as null", async () => {
    const fetchFn = vi.fn(async () => new Response(new Blob([]), { status: 200 }));
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    const frame = await client.fetchFrame("7", 0);
    expect(fetchFn.mock.calls[0][0]).toBe("/session/7/frame?index=0");
    expect(frame.revision).toBeNull();
  });

  it("requests material planes", async () => {
    const fetchFn = vi.fn(async () => new Response(new Blob([]), { status: 200 }));
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    await client.fetchMaterials("2", 1, "orm");
    expect(fetchFn.mock.calls[0][0]).toBe("/session/2/materials?index=1&plane=orm");
  });

  it("sends edits as patches and returns the new revision", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ revision: 5 }));
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    const out = await client.edit("9", { roughness_set: 0.25, exposure_ev: 1 });
    expect(out.revision).toBe(5);
    const [url, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("/session/9/edit");
    expect(JSON.parse(String(init.body))).toEqual({
      roughness_set: 0.25,
      exposure_ev: 1,
    });
  });

  it("rotates the environment without a rebuild body", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ revision: 2, rebuilding: false }));
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    const out = await client.rotateEnv("1", 90);
    expect(out.rebuilding).toBe(false);
    const [, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
    expect(JSON.parse(String(init.body))).toEqual({ rotation_deg: 90 });
  });

  it("surfaces service error details as ApiError", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ detail: "frame index out of range" }, 422),
    );
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    await expect(client.fetchFrame("1", 99)).rejects.toMatchObject({
      name: "ApiError",
      status: 422,
      message: "frame index out of range",
    });
  });

  it("maps 409 during pyramid builds to ApiError with status", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ detail: "pyramid build in progress" }, 409),
    );
    const client = new RelitClient("", fetchFn as unknown as typeof fetch);
    try {
      await client.fetchFrame("1", 0);
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(409);
    }
  });
});
