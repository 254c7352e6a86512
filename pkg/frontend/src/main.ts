// Viewer entry point: create/attach a session, then keep the two panes in
// sync with the control state through debounced latest-wins fetches.

import { ApiError, RelitClient } from "./api.js";
import { LatestWins } from "./scheduler.js";
import {
  ViewerState,
  clearEdits,
  initialState,
  isStale,
  noteDisplayedRevision,
  noteServerRevision,
  setAlbedoTint,
  setEnvRotation,
  setExposure,
  setFrameIndex,
  setMetallic,
  setRoughnessSet,
} from "./state.js";
import {
  buildUi,
  paintBlob,
  setBannerVisible,
  showToast,
} from "./ui.js";

const DEBOUNCE_MS = 30;

function query(name: string): string | null {
  return new URLSearchParams(window.location.search).get(name);
}

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const controls = buildUi(document, root);
  const client = new RelitClient(query("service") ?? "");
  let state: ViewerState = initialState();

  const toast = (msg: string) => showToast(document, controls.toastHost, msg);
  const onError = (err: unknown) => {
    if (err instanceof ApiError && err.status === 409) return; // still building
    if (err instanceof TypeError) {
      state = { ...state, connected: false };
      setBannerVisible(controls.banner, true);
      return;
    }
    toast(String(err instanceof Error ? err.message : err));
  };

  const framePane = new LatestWins<{ blob: Blob; revision: number | null }>(
    DEBOUNCE_MS,
    (result) => {
      paintBlob(controls.viewer, result.blob);
      state = noteDisplayedRevision(state, result.revision);
      state = { ...state, pendingFrame: framePane.busy };
      controls.statusLine.textContent =
        `frame ${state.frameIndex} · revision ${state.displayedRevision}` +
        (isStale(state) ? " (updating…)" : "");
      if (isStale(state)) refreshFrame();
    },
    onError,
  );
  const inspectorPane = new LatestWins<Blob>(
    DEBOUNCE_MS,
    (blob) => paintBlob(controls.inspector, blob),
    onError,
  );

  function refreshFrame(): void {
    if (!state.sessionId) return;
    const id = state.sessionId;
    const index = state.frameIndex;
    state = { ...state, pendingFrame: true };
    framePane.schedule(() => client.fetchFrame(id, index));
  }

  function refreshInspector(): void {
    if (!state.sessionId) return;
    const id = state.sessionId;
    const index = state.frameIndex;
    if (state.inspectorPlane === "relit") {
      inspectorPane.schedule(() => client.fetchFrame(id, index).then((r) => r.blob));
    } else {
      const plane = state.inspectorPlane;
      inspectorPane.schedule(() => client.fetchMaterials(id, index, plane));
    }
  }

  async function pushEdit(edit: Parameters<RelitClient["edit"]>[1]) {
    if (!state.sessionId) return;
    try {
      const { revision } = await client.edit(state.sessionId, edit);
      state = noteServerRevision(state, revision);
      refreshFrame();
      if (state.inspectorPlane !== "relit") refreshInspector();
    } catch (err) {
      onError(err);
    }
  }

  // --- session bootstrap ----------------------------------------------

  async function attach(): Promise<void> {
    setBannerVisible(controls.banner, false);
    try {
      let sessionId = query("session");
      if (!sessionId) {
        const bundle = query("bundle");
        const env = query("env");
        if (!bundle || !env) {
          controls.statusLine.textContent =
            "pass ?session=ID or ?bundle=…&env=… in the URL";
          return;
        }
        sessionId = (await client.createSession(bundle, env)).session_id;
      }
      state = { ...state, sessionId, connected: true };
      controls.statusLine.textContent = "building illumination pyramid…";
      for (;;) {
        const status = await client.status(sessionId);
        if (status.status === "error") {
          toast(`build failed: ${status.error}`);
          return;
        }
        if (status.status === "ready") {
          state = { ...state, frameCount: status.frames };
          state = noteServerRevision(state, status.revision);
          controls.frame.max = String(status.frames - 1);
          break;
        }
        await new Promise((resolve) => setTimeout(resolve, 150));
      }
      refreshFrame();
      refreshInspector();
    } catch (err) {
      onError(err);
      setBannerVisible(controls.banner, true);
    }
  }

  // --- control wiring ----------------------------------------------------

  controls.frame.addEventListener("input", () => {
    state = setFrameIndex(state, Number(controls.frame.value));
    refreshFrame();
    refreshInspector();
  });
  controls.rotation.addEventListener("input", () => {
    state = setEnvRotation(state, Number(controls.rotation.value));
    void pushEdit({ env_rotation_deg: state.envRotationDeg });
  });
  controls.exposure.addEventListener("input", () => {
    state = setExposure(state, Number(controls.exposure.value));
    void pushEdit({ exposure_ev: state.exposureEv });
  });
  controls.roughnessSet.addEventListener("input", () => {
    state = setRoughnessSet(state, Number(controls.roughnessSet.value));
    void pushEdit({ roughness_set: state.roughnessSet ?? undefined });
  });
  controls.metallicSet.addEventListener("input", () => {
    state = setMetallic(state, Number(controls.metallicSet.value));
    void pushEdit({ metallic_set: state.metallicSet ?? undefined });
  });
  const tintChanged = () => {
    state = setAlbedoTint(state, [
      Number(controls.tintR.value),
      Number(controls.tintG.value),
      Number(controls.tintB.value),
    ]);
    void pushEdit({ albedo_tint: state.albedoTint ?? undefined });
  };
  for (const input of [controls.tintR, controls.tintG, controls.tintB]) {
    input.addEventListener("change", tintChanged);
  }
  for (const [plane, button] of controls.planeButtons) {
    button.addEventListener("click", () => {
      state = { ...state, inspectorPlane: plane as ViewerState["inspectorPlane"] };
      refreshInspector();
    });
  }
  controls.reset.addEventListener("click", () => {
    if (!state.sessionId) return;
    void client
      .resetEdits(state.sessionId)
      .then(({ revision }) => {
        state = clearEdits(noteServerRevision(state, revision));
        refreshFrame();
        refreshInspector();
      })
      .catch(onError);
  });
  controls.retry.addEventListener("click", () => void attach());

  await attach();
}

void start();
