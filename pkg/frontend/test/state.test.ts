import { describe, expect, it } from "vitest";

import {
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
  setRoughnessScale,
  setRoughnessSet,
} from "../src/state.js";

describe("viewer state", () => {
  it("clamps the frame index to the orbit range", () => {
    const s = { ...initialState(), frameCount: 21 };
    expect(setFrameIndex(s, -3).frameIndex).toBe(0);
    expect(setFrameIndex(s, 20.6).frameIndex).toBe(20);
    expect(setFrameIndex(s, 97).frameIndex).toBe(20);
  });

  it("wraps the rotation dial into [0, 360)", () => {
    const s = initialState();
    expect(setEnvRotation(s, 370).envRotationDeg).toBe(10);
    expect(setEnvRotation(s, -30).envRotationDeg).toBe(330);
    expect(setEnvRotation(s, 360).envRotationDeg).toBe(0);
  });

  it("clamps exposure to the documented slider range", () => {
    const s = initialState();
    expect(setExposure(s, 9).exposureEv).toBe(4);
    expect(setExposure(s, -9).exposureEv).toBe(-4);
  });

  it("keeps the two roughness modes mutually exclusive", () => {
    let s = setRoughnessSet(initialState(), 0.3);
    expect(s.roughnessSet).toBe(0.3);
    expect(s.roughnessScale).toBeNull();
    s = setRoughnessScale(s, 1.5);
    expect(s.roughnessSet).toBeNull();
    expect(s.roughnessScale).toBe(1.5);
  });

  it("clamps material edits to valid ranges", () => {
    const s = initialState();
    expect(setMetallic(s, 1.7).metallicSet).toBe(1);
    expect(setRoughnessSet(s, -1).roughnessSet).toBe(0);
    expect(setAlbedoTint(s, [9, -1, 0.5]).albedoTint).toEqual([4, 0, 0.5]);
  });

  it("clearEdits drops all material overrides", () => {
    let s = setRoughnessSet(initialState(), 0.2);
    s = setMetallic(s, 1);
    s = setAlbedoTint(s, [1, 0.5, 0.25]);
    s = clearEdits(s);
    expect(s.roughnessSet).toBeNull();
    expect(s.metallicSet).toBeNull();
    expect(s.albedoTint).toBeNull();
  });

  it("tracks staleness between server and displayed revisions", () => {
    let s = initialState();
    s = noteServerRevision(s, 4);
    expect(isStale(s)).toBe(true);
    s = noteDisplayedRevision(s, 4);
    expect(isStale(s)).toBe(false);
    // a null header leaves the displayed revision untouched
    s = noteDisplayedRevision(s, null);
    expect(s.displayedRevision).toBe(4);
    // server revisions never go backwards
    s = noteServerRevision(s, 2);
    expect(s.serverRevision).toBe(4);
  });
});
