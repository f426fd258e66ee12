/** DOM construction. Everything here rebuilds deterministically from the
 * current snapshot and view state; no hidden incremental state. */

import { legendStops, NEUTRAL_COLOR, severityColor } from "./colorscale.js";
import { scaleBbox, toPixel, type Viewport } from "./geometry.js";
import type { DamagePoint, NetworkDoc, PlanDoc } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function buildSkeleton(root: HTMLElement, mapWidth: number, mapHeight: number): void {
  root.innerHTML = `
    <div class="toolbar">
      <span class="layers">
        <button type="button" data-layer="severity">severity</button>
        <button type="button" data-layer="damages">damages</button>
        <button type="button" data-layer="plan">plan</button>
      </span>
      <form class="plan-form">
        <label>T (s) <input name="T" type="number" min="0" step="any" value="900"></label>
        <label>root <input name="root" type="number" step="1"></label>
        <label><input name="return" type="checkbox"> return to root</label>
        <button type="submit">compute plan</button>
      </form>
      <span class="plan-readout"></span>
      <span class="plan-error" role="alert"></span>
    </div>
    <div class="banner" hidden>
      <span class="banner-text"></span>
      <button type="button" class="banner-retry">retry</button>
    </div>
    <div class="content">
      <svg class="map" width="${mapWidth}" height="${mapHeight}" viewBox="0 0 ${mapWidth} ${mapHeight}">
        <g class="layer-network"></g>
        <g class="layer-plan"></g>
        <g class="layer-damages"></g>
      </svg>
      <div class="legend"></div>
      <aside class="panel" hidden>
        <h3 class="panel-title"></h3>
        <div class="image-wrap" style="position: relative">
          <img class="damage-image" alt="damage capture">
          <div class="bbox-overlay" style="position: absolute; border: 2px solid #ff2d55"></div>
          <div class="image-missing" hidden></div>
        </div>
        <dl class="damage-meta"></dl>
        <div class="verdict-controls">
          <button type="button" data-status="confirmed">confirm</button>
          <button type="button" data-status="rejected">reject</button>
          <button type="button" data-status="relabeled">relabel</button>
          <select class="label-pick" hidden>
            <option value="">choose label</option>
            <option>D00</option><option>D10</option><option>D20</option><option>D40</option>
          </select>
          <input class="author" placeholder="reviewer" value="reviewer">
          <button type="button" class="submit-verdict" disabled>submit</button>
        </div>
        <div class="panel-error" role="alert"></div>
      </aside>
    </div>`;
}

export function renderNetwork(
  layer: SVGGElement,
  doc: NetworkDoc,
  vp: Viewport,
  domainMax: number,
): void {
  layer.replaceChildren();
  for (const feature of doc.features) {
    const line = layer.ownerDocument.createElementNS(SVG_NS, "polyline");
    const points = feature.geometry.coordinates
      .map(([lon, lat]) => toPixel(vp, lon, lat).map((v) => v.toFixed(1)).join(","))
      .join(" ");
    line.setAttribute("points", points);
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", severityColor(feature.properties.severity, domainMax));
    line.setAttribute("stroke-width", "4");
    line.setAttribute("data-edge-id", String(feature.properties.edge_id));
    line.setAttribute("data-severity", String(feature.properties.severity));
    layer.appendChild(line);
  }
}

export function renderDamages(
  layer: SVGGElement,
  damages: DamagePoint[],
  vp: Viewport,
  selectedId: string | null,
  onSelect: (damageId: string) => void,
): void {
  layer.replaceChildren();
  for (const d of damages) {
    const dot = layer.ownerDocument.createElementNS(SVG_NS, "circle");
    const [x, y] = toPixel(vp, d.lon, d.lat);
    dot.setAttribute("cx", x.toFixed(1));
    dot.setAttribute("cy", y.toFixed(1));
    dot.setAttribute("r", d.damage_id === selectedId ? "7" : "5");
    dot.setAttribute("fill", d.damage_id === selectedId ? "#ff2d55" : "#1d4ed8");
    dot.setAttribute("data-damage-id", d.damage_id);
    dot.addEventListener("click", () => onSelect(d.damage_id));
    layer.appendChild(dot);
  }
}

export function renderPlanOverlay(
  layer: SVGGElement,
  plan: PlanDoc | null,
  network: NetworkDoc,
  vp: Viewport,
): void {
  layer.replaceChildren();
  if (!plan) return;
  const byId = new Map(network.features.map((f) => [f.properties.edge_id, f]));
  plan.path.forEach((step, seq) => {
    const feature = byId.get(step.edge_id);
    if (!feature) return;
    const line = layer.ownerDocument.createElementNS(SVG_NS, "polyline");
    const points = feature.geometry.coordinates
      .map(([lon, lat]) => toPixel(vp, lon, lat).map((v) => v.toFixed(1)).join(","))
      .join(" ");
    line.setAttribute("points", points);
    line.setAttribute("fill", "none");
    if (step.action === "maintain") {
      line.setAttribute("stroke", "#0f766e");
      line.setAttribute("stroke-width", "7");
    } else {
      line.setAttribute("stroke", "#0f766e");
      line.setAttribute("stroke-width", "3");
      line.setAttribute("stroke-dasharray", "6 4");
    }
    line.setAttribute("data-plan-seq", String(seq));
    line.setAttribute("data-action", step.action);
    line.setAttribute("data-edge-id", String(step.edge_id));
    layer.appendChild(line);
  });
}

export function renderLegend(el: HTMLElement, domainMax: number): void {
  el.replaceChildren();
  for (const stop of legendStops(domainMax)) {
    const item = el.ownerDocument.createElement("span");
    item.className = "legend-item";
    const swatch = el.ownerDocument.createElement("i");
    swatch.style.backgroundColor = stop.color;
    item.appendChild(swatch);
    item.appendChild(el.ownerDocument.createTextNode(stop.value.toExponential(2) + "/m"));
    el.appendChild(item);
  }
  const neutral = el.querySelector<HTMLElement>("i");
  if (neutral) neutral.style.backgroundColor = NEUTRAL_COLOR;
}

export function positionBboxOverlay(
  overlay: HTMLElement,
  bbox: [number, number, number, number],
  naturalWidth: number,
  naturalHeight: number,
  displayWidth: number,
  displayHeight: number,
): void {
  const rect = scaleBbox(bbox, naturalWidth, naturalHeight, displayWidth, displayHeight);
  overlay.style.left = `${rect.left}px`;
  overlay.style.top = `${rect.top}px`;
  overlay.style.width = `${rect.width}px`;
  overlay.style.height = `${rect.height}px`;
}
