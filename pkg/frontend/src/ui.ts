// DOM construction and control wiring. This layer is deliberately thin:
// it owns no shading or image math, it only maps control events onto the
// callbacks handed in by main.ts and paints blobs into <img> panes.

export type Controls = {
  frame: HTMLInputElement;
  rotation: HTMLInputElement;
  exposure: HTMLInputElement;
  roughnessSet: HTMLInputElement;
  metallicSet: HTMLInputElement;
  tintR: HTMLInputElement;
  tintG: HTMLInputElement;
  tintB: HTMLInputElement;
  planeButtons: Map<string, HTMLButtonElement>;
  reset: HTMLButtonElement;
  viewer: HTMLImageElement;
  inspector: HTMLImageElement;
  statusLine: HTMLElement;
  banner: HTMLElement;
  retry: HTMLButtonElement;
  toastHost: HTMLElement;
};

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) node.textContent = text;
  return node;
}

function slider(
  doc: Document,
  host: HTMLElement,
  label: string,
  attrs: Record<string, string>,
): HTMLInputElement {
  const row = el(doc, "div", { class: "row" });
  row.appendChild(el(doc, "label", {}, label));
  const input = el(doc, "input", { type: "range", ...attrs });
  row.appendChild(input);
  const value = el(doc, "span", { class: "value" }, attrs.value ?? "");
  row.appendChild(value);
  input.addEventListener("input", () => (value.textContent = input.value));
  host.appendChild(row);
  return input;
}

export function buildUi(doc: Document, root: HTMLElement): Controls {
  root.innerHTML = "";
  const banner = el(doc, "div", { class: "banner hidden" },
    "service unreachable");
  const retry = el(doc, "button", {}, "retry");
  banner.appendChild(retry);
  root.appendChild(banner);

  const layout = el(doc, "div", { class: "layout" });
  root.appendChild(layout);

  const panes = el(doc, "div", { class: "panes" });
  const viewer = el(doc, "img", { class: "pane", alt: "relit frame" });
  const inspector = el(doc, "img", { class: "pane", alt: "plane inspector" });
  panes.appendChild(viewer);
  panes.appendChild(inspector);
  layout.appendChild(panes);

  const side = el(doc, "div", { class: "controls" });
  layout.appendChild(side);

  const frame = slider(doc, side, "frame", {
    min: "0", max: "20", step: "1", value: "0",
  });
  const rotation = slider(doc, side, "env rotation", {
    min: "0", max: "360", step: "1", value: "0",
  });
  const exposure = slider(doc, side, "exposure (EV)", {
    min: "-4", max: "4", step: "0.1", value: "0",
  });
  const roughnessSet = slider(doc, side, "roughness", {
    min: "0", max: "1", step: "0.01", value: "0.5",
  });
  const metallicSet = slider(doc, side, "metallic", {
    min: "0", max: "1", step: "0.01", value: "0",
  });
  const tintRow = el(doc, "div", { class: "row" });
  tintRow.appendChild(el(doc, "label", {}, "albedo tint"));
  const tintR = el(doc, "input", { type: "number", min: "0", max: "4", step: "0.05", value: "1" });
  const tintG = el(doc, "input", { type: "number", min: "0", max: "4", step: "0.05", value: "1" });
  const tintB = el(doc, "input", { type: "number", min: "0", max: "4", step: "0.05", value: "1" });
  [tintR, tintG, tintB].forEach((i) => tintRow.appendChild(i));
  side.appendChild(tintRow);

  const planeRow = el(doc, "div", { class: "row" });
  planeRow.appendChild(el(doc, "label", {}, "inspect"));
  const planeButtons = new Map<string, HTMLButtonElement>();
  for (const plane of ["relit", "rgb", "albedo", "orm", "normal"]) {
    const b = el(doc, "button", { "data-plane": plane }, plane);
    planeButtons.set(plane, b);
    planeRow.appendChild(b);
  }
  side.appendChild(planeRow);

  const reset = el(doc, "button", { class: "reset" }, "reset edits");
  side.appendChild(reset);

  const statusLine = el(doc, "div", { class: "status" }, "connecting…");
  side.appendChild(statusLine);

  const toastHost = el(doc, "div", { class: "toasts" });
  root.appendChild(toastHost);

  return {
    frame, rotation, exposure, roughnessSet, metallicSet,
    tintR, tintG, tintB, planeButtons, reset, viewer, inspector,
    statusLine, banner, retry, toastHost,
  };
}

export function showToast(doc: Document, host: HTMLElement, message: string): void {
  const toast = el(doc, "div", { class: "toast" }, message);
  host.appendChild(toast);
  setTimeout(() => toast.remove(), 4000);
}

export function setBannerVisible(banner: HTMLElement, visible: boolean): void {
  banner.classList.toggle("hidden", !visible);
}

export function paintBlob(img: HTMLImageElement, blob: Blob): void {
  const url = URL.createObjectURL(blob);
  const previous = img.src;
  img.src = url;
  if (previous.startsWith("blob:")) URL.revokeObjectURL(previous);
}
