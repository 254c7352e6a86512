// Viewer state and the pure update rules the controls go through.
// Invariants: sliders stay in their documented ranges, the displayed
// revision tracks the server revision, and a pending flag marks in-flight
// frame requests so panes never overlap fetches.

import type { PlaneName } from "./api.js";

export type InspectorPlane = "relit" | PlaneName;

export type ViewerState = {
  sessionId: string | null;
  frameCount: number;
  frameIndex: number;
  envRotationDeg: number; // 0..360 dial
  exposureEv: number; // -4..+4
  roughnessSet: number | null; // null = untouched
  roughnessScale: number | null;
  metallicSet: number | null;
  albedoTint: [number, number, number] | null;
  inspectorPlane: InspectorPlane;
  serverRevision: number;
  displayedRevision: number;
  pendingFrame: boolean;
  connected: boolean;
};

export function initialState(): ViewerState {
  return {
    sessionId: null,
    frameCount: 1,
    frameIndex: 0,
    envRotationDeg: 0,
    exposureEv: 0,
    roughnessSet: null,
    roughnessScale: null,
    metallicSet: null,
    albedoTint: null,
    inspectorPlane: "relit",
    serverRevision: 0,
    displayedRevision: -1,
    pendingFrame: false,
    connected: false,
  };
}

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, v));

export function setFrameIndex(state: ViewerState, index: number): ViewerState {
  const bounded = clamp(Math.round(index), 0, state.frameCount - 1);
  return { ...state, frameIndex: bounded };
}

export function setEnvRotation(state: ViewerState, deg: number): ViewerState {
  let wrapped = deg % 360;
  if (wrapped < 0) wrapped += 360;
  return { ...state, envRotationDeg: wrapped };
}

export function setExposure(state: ViewerState, ev: number): ViewerState {
  return { ...state, exposureEv: clamp(ev, -4, 4) };
}

export function setRoughnessSet(state: ViewerState, v: number): ViewerState {
  // the two roughness modes are mutually exclusive, mirroring the service
  return { ...state, roughnessSet: clamp(v, 0, 1), roughnessScale: null };
}

export function setRoughnessScale(state: ViewerState, v: number): ViewerState {
  return { ...state, roughnessScale: clamp(v, 0, 4), roughnessSet: null };
}

export function setMetallic(state: ViewerState, v: number): ViewerState {
  return { ...state, metallicSet: clamp(v, 0, 1) };
}

export function setAlbedoTint(
  state: ViewerState,
  tint: [number, number, number],
): ViewerState {
  const bounded = tint.map((t) => clamp(t, 0, 4)) as [number, number, number];
  return { ...state, albedoTint: bounded };
}

export function clearEdits(state: ViewerState): ViewerState {
  return {
    ...state,
    roughnessSet: null,
    roughnessScale: null,
    metallicSet: null,
    albedoTint: null,
  };
}

export function noteServerRevision(
  state: ViewerState,
  revision: number,
): ViewerState {
  return { ...state, serverRevision: Math.max(state.serverRevision, revision) };
}

export function noteDisplayedRevision(
  state: ViewerState,
  revision: number | null,
): ViewerState {
  if (revision === null) return state;
  return { ...state, displayedRevision: revision };
}

export function isStale(state: ViewerState): boolean {
  return state.displayedRevision !== state.serverRevision;
}
