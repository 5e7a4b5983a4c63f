/**
 * DOM construction and wiring for the viewer.
 *
 * Everything here is thin glue: state lives in ViewerModel, camera math
 * in orbit.ts, the transfer-function model in tf.ts.  Controls emit
 * scene patches through a shared rate limiter so drag gestures stay
 * under the service's patch budget.
 */

import type { ViewerModel } from "./model";
import type { RateLimiter } from "./rate_limit";
import type { Frame, SceneDocument, ScenePatch } from "./protocol";
import type { ServiceClient } from "./client";
import { cameraPatch, orbit, pan, zoom, type CameraState } from "./orbit";
import {
  exportCsv,
  fromDocument,
  importCsv,
  movePoint,
  toPatch,
  type TransferFunction,
} from "./tf";

export interface UiDeps {
  model: ViewerModel;
  client: ServiceClient;
  limiter: RateLimiter<ScenePatch>;
}

export class ViewerUi {
  private readonly canvas: HTMLCanvasElement;
  private readonly tfCanvas: HTMLCanvasElement;
  private readonly iterationLabel: HTMLElement;
  private readonly revisionLabel: HTMLElement;
  private readonly statusLabel: HTMLElement;
  private readonly errorLabel: HTMLElement;
  private readonly lightList: HTMLElement;
  private readonly inputs = new Map<string, HTMLInputElement>();

  private tf: TransferFunction | null = null;
  private dragPoint = -1;
  private camera: CameraState | null = null;
  private gesture: "orbit" | "pan" | null = null;
  private lastPointer: [number, number] = [0, 0];

  constructor(
    private readonly root: HTMLElement,
    private readonly deps: UiDeps,
  ) {
    root.innerHTML = "";
    const viewport = el("div", "viewport");
    this.canvas = document.createElement("canvas");
    this.canvas.className = "frame";
    this.canvas.width = 512;
    this.canvas.height = 512;
    viewport.appendChild(this.canvas);

    const statusBar = el("div", "status-bar");
    this.statusLabel = el("span", "status", "connecting");
    this.iterationLabel = el("span", "iteration", "iteration 0");
    this.revisionLabel = el("span", "revision", "revision 0");
    this.errorLabel = el("span", "error", "");
    statusBar.append(
      this.statusLabel,
      this.iterationLabel,
      this.revisionLabel,
      this.errorLabel,
    );
    viewport.appendChild(statusBar);

    const panel = el("div", "panel");
    this.tfCanvas = document.createElement("canvas");
    this.tfCanvas.className = "tf-editor";
    this.tfCanvas.width = 320;
    this.tfCanvas.height = 120;
    panel.appendChild(this.sectionTransferFunction());
    panel.appendChild(this.sectionMaterial());
    this.lightList = el("div", "light-list");
    panel.appendChild(this.sectionLights());
    panel.appendChild(this.sectionBackground());
    panel.appendChild(this.sectionCamera());
    panel.appendChild(this.sectionClipPlanes());
    panel.appendChild(this.sectionSnapshot());

    this.root.append(viewport, panel);
    this.bindCameraGestures();
    this.bindTfGestures();
  }

  // ---- model callbacks -------------------------------------------------

  showFrame(frame: Frame): void {
    this.iterationLabel.textContent = `iteration ${frame.iteration}`;
    this.revisionLabel.textContent = `revision ${frame.revision}`;
    const blob = new Blob([frame.png.slice().buffer], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    const img = new Image();
    img.onload = () => {
      this.canvas.width = frame.width;
      this.canvas.height = frame.height;
      this.canvas.getContext("2d")?.drawImage(img, 0, 0);
      URL.revokeObjectURL(url);
    };
    img.src = url;
  }

  showScene(scene: SceneDocument, revision: number): void {
    this.revisionLabel.textContent = `revision ${revision}`;
    this.tf = fromDocument(scene.transfer_function);
    this.camera = {
      position: scene.camera.position.slice(),
      target: scene.camera.target.slice(),
      up: scene.camera.up.slice(),
    };
    this.setSlider("metallic", scene.material.metallic);
    this.setSlider("roughness", scene.material.roughness);
    this.setSlider("specular", scene.material.specular);
    this.setColor("base_color", scene.material.base_color);
    this.setCheckbox("background_enabled", scene.background.enabled);
    this.setSlider("background_intensity", scene.background.intensity_scale);
    const modeSelect = document.getElementById(
      "background-mode",
    ) as HTMLSelectElement | null;
    if (modeSelect) modeSelect.value = scene.background.mode;
    const proj = document.getElementById(
      "projection",
    ) as HTMLSelectElement | null;
    if (proj) proj.value = scene.camera.projection;
    ["x", "y", "z"].forEach((axis, i) => {
      const plane = scene.clip_planes[i];
      if (plane === undefined) return;
      this.setCheckbox(`clip_${axis}_enabled`, plane.enabled);
      this.setSlider(`clip_${axis}_offset`, plane.offset);
    });
    this.renderLights(scene);
    this.drawTf();
  }

  showStatus(status: string): void {
    this.statusLabel.textContent = status;
    this.statusLabel.dataset.status = status;
  }

  showError(message: string): void {
    this.errorLabel.textContent = message;
    if (message !== "") {
      setTimeout(() => {
        this.errorLabel.textContent = "";
      }, 4000);
    }
  }

  // ---- sections --------------------------------------------------------

  private sectionTransferFunction(): HTMLElement {
    const section = sectionEl("Transfer function");
    section.appendChild(this.tfCanvas);
    const row = el("div", "row");
    const importBtn = button("Import .tfcsv", () => fileInput.click());
    const exportBtn = button("Export .tfcsv", () => {
      if (this.tf === null) return;
      downloadText("transfer_function.tfcsv", exportCsv(this.tf));
    });
    const fileInput = document.createElement("input");
    fileInput.type = "file";
    fileInput.accept = ".tfcsv,.csv";
    fileInput.style.display = "none";
    fileInput.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (!file) return;
      void file.text().then((text) => {
        try {
          this.tf = importCsv(text);
          this.drawTf();
          this.deps.limiter.push(toPatch(this.tf));
        } catch (err) {
          this.showError(String(err));
        }
      });
    });
    row.append(importBtn, exportBtn, fileInput);
    section.appendChild(row);
    return section;
  }

  private sectionMaterial(): HTMLElement {
    const section = sectionEl("Material");
    section.appendChild(
      this.colorRow("base_color", "Base color", (rgb) =>
        this.deps.limiter.push({ material: { base_color: rgb } }),
      ),
    );
    for (const key of ["metallic", "roughness", "specular"] as const) {
      section.appendChild(
        this.sliderRow(key, key, 0, 1, 0.01, (v) =>
          this.deps.limiter.push({ material: { [key]: v } }),
        ),
      );
    }
    return section;
  }

  private sectionLights(): HTMLElement {
    const section = sectionEl("Area lights");
    section.appendChild(this.lightList);
    section.appendChild(
      button("Add light", () => {
        const scene = this.deps.model.scene;
        if (scene === null) return;
        const lights = scene.area_lights.concat([
          {
            center: [140, 140, -80],
            edge_u: [40, 0, 0],
            edge_v: [0, 40, 0],
            radiance: [60, 60, 60],
            enabled: true,
          },
        ]);
        void this.deps.model.sendPatch({ area_lights: lights });
      }),
    );
    return section;
  }

  private renderLights(scene: SceneDocument): void {
    this.lightList.innerHTML = "";
    scene.area_lights.forEach((light, i) => {
      const row = el("div", "row light-row");
      const enable = document.createElement("input");
      enable.type = "checkbox";
      enable.checked = light.enabled;
      enable.addEventListener("change", () => {
        const lights = scene.area_lights.map((l, j) =>
          j === i ? { ...l, enabled: enable.checked } : l,
        );
        void this.deps.model.sendPatch({ area_lights: lights });
      });
      const color = document.createElement("input");
      color.type = "color";
      color.value = rgbToHex(normalizeRadiance(light.radiance));
      color.addEventListener("change", () => {
        const scaleFactor = Math.max(...light.radiance, 1e-6);
        const rgb = hexToRgb(color.value).map((c) => c * scaleFactor);
        const lights = scene.area_lights.map((l, j) =>
          j === i ? { ...l, radiance: rgb } : l,
        );
        void this.deps.model.sendPatch({ area_lights: lights });
      });
      const remove = button("Remove", () => {
        const lights = scene.area_lights.filter((_, j) => j !== i);
        void this.deps.model.sendPatch({ area_lights: lights });
      });
      row.append(enable, el("span", "", `light ${i}`), color, remove);
      this.lightList.appendChild(row);
    });
  }

  private sectionBackground(): HTMLElement {
    const section = sectionEl("Background");
    const row = el("div", "row");
    const select = document.createElement("select");
    select.id = "background-mode";
    for (const mode of ["constant", "procedural_sky", "cubemap"]) {
      const opt = document.createElement("option");
      opt.value = mode;
      opt.textContent = mode;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      void this.deps.model.sendPatch({ background: { mode: select.value } });
    });
    row.append(labelEl("Mode"), select);
    section.appendChild(row);
    section.appendChild(
      this.checkboxRow("background_enabled", "Enabled", (on) =>
        this.deps.limiter.push({ background: { enabled: on } }),
      ),
    );
    section.appendChild(
      this.sliderRow("background_intensity", "Intensity", 0, 4, 0.05, (v) =>
        this.deps.limiter.push({ background: { intensity_scale: v } }),
      ),
    );
    return section;
  }

  private sectionCamera(): HTMLElement {
    const section = sectionEl("Camera");
    const row = el("div", "row");
    const select = document.createElement("select");
    select.id = "projection";
    for (const mode of ["perspective", "orthographic"]) {
      const opt = document.createElement("option");
      opt.value = mode;
      opt.textContent = mode;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      void this.deps.model.sendPatch({
        camera: { projection: select.value },
      });
    });
    row.append(labelEl("Projection"), select);
    section.appendChild(row);
    section.appendChild(
      el("div", "hint", "drag: orbit, shift-drag: pan, wheel: zoom"),
    );
    return section;
  }

  private sectionClipPlanes(): HTMLElement {
    const section = sectionEl("Clip planes");
    const axes: [string, number[]][] = [
      ["x", [1, 0, 0]],
      ["y", [0, 1, 0]],
      ["z", [0, 0, 1]],
    ];
    for (const [axis, normal] of axes) {
      const row = el("div", "row");
      const enable = document.createElement("input");
      enable.type = "checkbox";
      enable.id = `clip-${axis}-enabled`;
      this.inputs.set(`clip_${axis}_enabled`, enable);
      const slider = document.createElement("input");
      slider.type = "range";
      slider.min = "0";
      slider.max = "512";
      slider.step = "0.5";
      slider.id = `clip-${axis}-offset`;
      this.inputs.set(`clip_${axis}_offset`, slider);
      const push = () => this.deps.limiter.push(this.clipPatch(axes));
      enable.addEventListener("change", push);
      slider.addEventListener("input", push);
      row.append(labelEl(axis), enable, slider);
      section.appendChild(row);
      void normal;
    }
    return section;
  }

  private clipPatch(axes: [string, number[]][]): ScenePatch {
    const planes = axes.map(([axis, normal]) => ({
      normal,
      offset: Number(this.inputs.get(`clip_${axis}_offset`)?.value ?? 0),
      enabled: this.inputs.get(`clip_${axis}_enabled`)?.checked ?? false,
    }));
    return { clip_planes: planes };
  }

  private sectionSnapshot(): HTMLElement {
    const section = sectionEl("Snapshot");
    const row = el("div", "row");
    for (const format of ["png", "pfm"] as const) {
      const link = document.createElement("a");
      link.href = this.deps.client.snapshotUrl(format);
      link.textContent = `Download .${format}`;
      link.download = `snapshot.${format}`;
      row.appendChild(link);
    }
    section.appendChild(row);
    return section;
  }

  // ---- camera gestures -------------------------------------------------

  private bindCameraGestures(): void {
    this.canvas.addEventListener("pointerdown", (ev) => {
      this.gesture = ev.shiftKey ? "pan" : "orbit";
      this.lastPointer = [ev.clientX, ev.clientY];
      this.canvas.setPointerCapture(ev.pointerId);
    });
    this.canvas.addEventListener("pointermove", (ev) => {
      if (this.gesture === null || this.camera === null) return;
      const dx = ev.clientX - this.lastPointer[0];
      const dy = ev.clientY - this.lastPointer[1];
      this.lastPointer = [ev.clientX, ev.clientY];
      if (this.gesture === "orbit") {
        this.camera = orbit(this.camera, -dx * 0.01, -dy * 0.01);
      } else {
        this.camera = pan(this.camera, -dx * 0.25, dy * 0.25);
      }
      this.deps.limiter.push(cameraPatch(this.camera));
    });
    const end = () => {
      if (this.gesture !== null) this.deps.limiter.flush();
      this.gesture = null;
    };
    this.canvas.addEventListener("pointerup", end);
    this.canvas.addEventListener("pointerleave", end);
    this.canvas.addEventListener("wheel", (ev) => {
      if (this.camera === null) return;
      ev.preventDefault();
      this.camera = zoom(this.camera, ev.deltaY > 0 ? 1.1 : 1 / 1.1);
      this.deps.limiter.push(cameraPatch(this.camera));
    });
  }

  // ---- transfer-function editor ---------------------------------------

  private bindTfGestures(): void {
    this.tfCanvas.addEventListener("pointerdown", (ev) => {
      if (this.tf === null) return;
      const [x, y] = this.tfCoords(ev);
      this.dragPoint = this.nearestPoint(x, y);
      this.tfCanvas.setPointerCapture(ev.pointerId);
    });
    this.tfCanvas.addEventListener("pointermove", (ev) => {
      if (this.tf === null || this.dragPoint < 0) return;
      const [x, y] = this.tfCoords(ev);
      const [lo, hi] = this.tfRange();
      const value = lo + (x / this.tfCanvas.width) * (hi - lo);
      const alpha = 1 - y / this.tfCanvas.height;
      this.tf = movePoint(this.tf, this.dragPoint, value, alpha);
      this.drawTf();
      this.deps.limiter.push(toPatch(this.tf));
    });
    this.tfCanvas.addEventListener("pointerup", () => {
      if (this.dragPoint >= 0) this.deps.limiter.flush();
      this.dragPoint = -1;
    });
  }

  private tfCoords(ev: PointerEvent): [number, number] {
    const rect = this.tfCanvas.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  }

  private tfRange(): [number, number] {
    const points = this.tf?.points ?? [];
    if (points.length === 0) return [0, 1];
    const lo = points[0].value;
    const hi = points[points.length - 1].value;
    const pad = Math.max(1, (hi - lo) * 0.05);
    return [lo - pad, hi + pad];
  }

  private nearestPoint(x: number, y: number): number {
    if (this.tf === null) return -1;
    const [lo, hi] = this.tfRange();
    let best = -1;
    let bestDist = 12 * 12; // 12 px pick radius
    this.tf.points.forEach((p, i) => {
      const px = ((p.value - lo) / (hi - lo)) * this.tfCanvas.width;
      const py = (1 - p.a) * this.tfCanvas.height;
      const d = (px - x) ** 2 + (py - y) ** 2;
      if (d < bestDist) {
        best = i;
        bestDist = d;
      }
    });
    return best;
  }

  private drawTf(): void {
    const ctx = this.tfCanvas.getContext("2d");
    if (ctx === null || this.tf === null) return;
    const { width, height } = this.tfCanvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#181818";
    ctx.fillRect(0, 0, width, height);
    const [lo, hi] = this.tfRange();
    const toX = (v: number) => ((v - lo) / (hi - lo)) * width;
    const toY = (a: number) => (1 - a) * height;
    ctx.strokeStyle = "#e0e0e0";
    ctx.beginPath();
    this.tf.points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(toX(p.value), toY(p.a));
      else ctx.lineTo(toX(p.value), toY(p.a));
    });
    ctx.stroke();
    for (const p of this.tf.points) {
      ctx.fillStyle = `rgb(${p.r * 255}, ${p.g * 255}, ${p.b * 255})`;
      ctx.strokeStyle = "#ffffff";
      ctx.beginPath();
      ctx.arc(toX(p.value), toY(p.a), 4, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    }
  }

  // ---- small control builders -----------------------------------------

  private sliderRow(
    key: string,
    label: string,
    min: number,
    max: number,
    step: number,
    onChange: (value: number) => void,
  ): HTMLElement {
    const row = el("div", "row");
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(min);
    input.max = String(max);
    input.step = String(step);
    input.id = key.replace(/_/g, "-");
    input.addEventListener("input", () => onChange(Number(input.value)));
    this.inputs.set(key, input);
    row.append(labelEl(label), input);
    return row;
  }

  private checkboxRow(
    key: string,
    label: string,
    onChange: (on: boolean) => void,
  ): HTMLElement {
    const row = el("div", "row");
    const input = document.createElement("input");
    input.type = "checkbox";
    input.id = key.replace(/_/g, "-");
    input.addEventListener("change", () => onChange(input.checked));
    this.inputs.set(key, input);
    row.append(labelEl(label), input);
    return row;
  }

  private colorRow(
    key: string,
    label: string,
    onChange: (rgb: number[]) => void,
  ): HTMLElement {
    const row = el("div", "row");
    const input = document.createElement("input");
    input.type = "color";
    input.id = key.replace(/_/g, "-");
    input.addEventListener("change", () => onChange(hexToRgb(input.value)));
    this.inputs.set(key, input);
    row.append(labelEl(label), input);
    return row;
  }

  private setSlider(key: string, value: number): void {
    const input = this.inputs.get(key);
    if (input) input.value = String(value);
  }

  private setCheckbox(key: string, on: boolean): void {
    const input = this.inputs.get(key);
    if (input) input.checked = on;
  }

  private setColor(key: string, rgb: number[]): void {
    const input = this.inputs.get(key);
    if (input) input.value = rgbToHex(rgb);
  }
}

// ---- helpers -----------------------------------------------------------

function el(tag: string, className: string, text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function sectionEl(title: string): HTMLElement {
  const section = el("section", "section");
  section.appendChild(el("h2", "", title));
  return section;
}

function labelEl(text: string): HTMLElement {
  return el("label", "", text);
}

function button(text: string, onClick: () => void): HTMLButtonElement {
  const btn = document.createElement("button");
  btn.type = "button";
  btn.textContent = text;
  btn.addEventListener("click", onClick);
  return btn;
}

function downloadText(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  URL.revokeObjectURL(url);
}

export function hexToRgb(hex: string): number[] {
  const n = parseInt(hex.slice(1), 16);
  return [(n >> 16) & 0xff, (n >> 8) & 0xff, n & 0xff].map((c) => c / 255);
}

export function rgbToHex(rgb: number[]): string {
  const to2 = (c: number) =>
    Math.round(Math.min(Math.max(c, 0), 1) * 255)
      .toString(16)
      .padStart(2, "0");
  return `#${to2(rgb[0])}${to2(rgb[1])}${to2(rgb[2])}`;
}

function normalizeRadiance(radiance: number[]): number[] {
  const peak = Math.max(...radiance, 1e-6);
  return radiance.map((c) => c / peak);
}
