import { ApiClient } from "./client.js";
import { ViewerController } from "./controller.js";
import { AGREEMENT_PRESETS, AGREEMENT_RANGE, ENTROPY_PRESETS, ENTROPY_RANGE } from "./presets.js";
import { ViewerState } from "./state.js";
import type { DistributionModel, Strategy } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function download(name: string, text: string): void {
  const a = el("a", {
    href: URL.createObjectURL(new Blob([text], { type: "application/json" })),
    download: name,
  });
  a.click();
}

async function boot(): Promise<void> {
  const state = new ViewerState();
  const client = new ApiClient("");
  const viewport = el("img", { id: "viewport", alt: "volume render" });
  const overlay = el("img", { id: "overlay", alt: "probabilistic map view" });
  const toast = el("div", { id: "toast" });

  const controller = new ViewerController(state, client, {
    onFrame: (blob) => { viewport.src = URL.createObjectURL(blob); },
    onOverlay: (blob) => { overlay.src = URL.createObjectURL(blob); },
    onError: (msg) => {
      toast.textContent = msg;
      setTimeout(() => { toast.textContent = ""; }, 4000);
    },
  });

  const root = document.getElementById("app") ?? document.body;
  const controls = el("div", { id: "controls" });

  const datasets = await client.datasets();
  const dsSelect = el("select", { id: "dataset" });
  for (const d of datasets) dsSelect.append(el("option", { value: d.name }, d.name));
  if (datasets.length) {
    state.dataset = datasets[0].name;
    const [nx, ny] = datasets[0].dims;
    controller.setMapDims(nx, ny);
    const ext = Math.hypot(...datasets[0].dims);
    state.orbit.center = datasets[0].dims.map((d) => (d - 1) / 2) as
      [number, number, number];
    state.orbit.distance = 2.2 * ext;
  }
  dsSelect.onchange = () => {
    state.dataset = dsSelect.value;
    const d = datasets.find((x) => x.name === dsSelect.value);
    if (d) controller.setMapDims(d.dims[0], d.dims[1]);
    controller.onCameraOrTfChange();
  };

  const modelSelect = el("select", { id: "model" });
  for (const m of ["mean", "uniform", "gaussian", "gmm4", "quantile"]) {
    modelSelect.append(el("option", { value: m }, m));
  }
  modelSelect.value = state.model;
  modelSelect.onchange = () => {
    state.model = modelSelect.value as DistributionModel;
    controller.onCameraOrTfChange();
  };

  const strategySelect = el("select", { id: "strategy" });
  for (const s of ["morse_mapping", "kmeans", "nearest_mandatory"]) {
    strategySelect.append(el("option", { value: s }, s));
  }
  strategySelect.onchange = () => {
    state.strategy = strategySelect.value as Strategy;
    controller.requestView("blend");
  };

  const timeSlider = el("input", { type: "range", min: "0", max: "0", value: "0" });
  timeSlider.oninput = () => {
    state.timeIndex = Number(timeSlider.value);
    controller.onCameraOrTfChange();
  };

  function orbitSlider(label: string, min: number, max: number, get: () => number,
                       set: (v: number) => void): HTMLElement {
    const wrap = el("label", {}, label);
    const s = el("input", {
      type: "range", min: String(min), max: String(max), value: String(get()),
    });
    s.oninput = () => { set(Number(s.value)); controller.onCameraOrTfChange(); };
    wrap.append(s);
    return wrap;
  }

  function thresholdBlock(mode: "entropy" | "agreement"): HTMLElement {
    const presets = mode === "entropy" ? ENTROPY_PRESETS : AGREEMENT_PRESETS;
    const range = mode === "entropy" ? ENTROPY_RANGE : AGREEMENT_RANGE;
    const wrap = el("div", { class: "threshold" }, mode);
    const slider = el("input", {
      type: "range", min: String(range.min), max: String(range.max),
      step: String(range.step),
      value: String(mode === "entropy" ? state.tau : state.alpha),
    });
    slider.oninput = () => controller.onThresholdChange(mode, Number(slider.value));
    wrap.append(slider);
    for (const v of presets) {
      const b = el("button", { "data-preset": String(v) }, String(v));
      b.onclick = () => {
        slider.value = String(v);
        controller.onThresholdChange(mode, v);
      };
      wrap.append(b);
    }
    return wrap;
  }

  overlay.onclick = (ev) => {
    const rect = overlay.getBoundingClientRect();
    const dims = datasets.find((x) => x.name === state.dataset)?.dims;
    if (!dims || !rect.width || !rect.height) return;
    const x = Math.floor(((ev.clientX - rect.left) / rect.width) * dims[0]);
    const y = Math.floor(((ev.clientY - rect.top) / rect.height) * dims[1]);
    void controller.onMapClick(x, y).then(() => renderPanel());
  };

  const panelDiv = el("div", { id: "query-panel" });
  function renderPanel(): void {
    panelDiv.replaceChildren();
    for (const row of controller.panel.rows) {
      const line = el("div", { class: "row" });
      const swatch = el("span", {
        class: "swatch",
        style: `background: rgb(${row.color.join(",")})`,
      });
      const bar = el("span", { class: "bar", style: `width: ${row.barWidth}` });
      line.append(swatch, el("span", {}, `label ${row.label}: ${row.text}`), bar);
      panelDiv.append(line);
    }
    markerLayer.replaceChildren();
    for (const m of controller.markers.markers) {
      markerLayer.append(el("span", { class: "marker" }, String(m.id)));
    }
  }
  const markerLayer = el("div", { id: "markers" });

  const exportTfBtn = el("button", {}, "export TF");
  exportTfBtn.onclick = () => download("tf.json", state.exportTf());
  const exportCamBtn = el("button", {}, "export camera");
  exportCamBtn.onclick = () => download("camera.json", state.exportCamera());

  controls.append(
    dsSelect, modelSelect, strategySelect, timeSlider,
    orbitSlider("azimuth", 0, 360, () => state.orbit.azimuthDeg,
                (v) => { state.orbit.azimuthDeg = v; }),
    orbitSlider("elevation", -89, 89, () => state.orbit.elevationDeg,
                (v) => { state.orbit.elevationDeg = v; }),
    thresholdBlock("entropy"), thresholdBlock("agreement"),
    exportTfBtn, exportCamBtn,
  );
  root.append(controls, viewport, overlay, markerLayer, panelDiv, toast);

  controller.onCameraOrTfChange();
  controller.requestView("blend");
}

if (typeof document !== "undefined") {
  void boot();
}
