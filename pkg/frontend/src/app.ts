import { ApiError, SurveyApi } from "./api.js";
import { severityDomainMax } from "./colorscale.js";
import { fitViewport, type Viewport } from "./geometry.js";
import {
  buildSkeleton,
  positionBboxOverlay,
  renderDamages,
  renderLegend,
  renderNetwork,
  renderPlanOverlay,
} from "./render.js";
import {
  clearDraft,
  draftSubmittable,
  initialViewState,
  selectDamage,
  setDraftLabel,
  setLayer,
  startDraft,
  type ViewState,
} from "./state.js";
import type { DamageLabel, DamagePoint, NetworkDoc, PlanDoc, PlanParams, VerdictStatus } from "./types.js";

export interface AppOptions {
  mapWidth?: number;
  mapHeight?: number;
  imageDisplaySize?: [number, number];
  /** Override when the environment cannot load images (tests). */
  imageNaturalSize?: [number, number] | null;
}

/** Wires the service snapshot, the view state, and the DOM together.
 *
 * All mutation goes through methods; every method ends in a full re-render,
 * so the DOM is always a function of (snapshot, view state).
 */
export class App {
  state: ViewState = initialViewState();
  network: NetworkDoc | null = null;
  damages: DamagePoint[] = [];
  plan: PlanDoc | null = null;
  planError = "";
  panelError = "";
  viewport: Viewport | null = null;
  private pending: Promise<unknown> = Promise.resolve();
  private readonly mapWidth: number;
  private readonly mapHeight: number;
  private readonly imageDisplaySize: [number, number];
  private readonly imageNaturalSize: [number, number] | null;

  constructor(
    private readonly api: SurveyApi,
    private readonly root: HTMLElement,
    options: AppOptions = {},
  ) {
    this.mapWidth = options.mapWidth ?? 800;
    this.mapHeight = options.mapHeight ?? 600;
    this.imageDisplaySize = options.imageDisplaySize ?? [508, 380];
    this.imageNaturalSize = options.imageNaturalSize ?? null;
    buildSkeleton(root, this.mapWidth, this.mapHeight);
    this.wireStaticHandlers();
  }

  /** Resolves when every in-flight request kicked off by UI events is done. */
  whenIdle(): Promise<unknown> {
    return this.pending;
  }

  private track<T>(p: Promise<T>): Promise<T> {
    this.pending = this.pending.then(() => p.catch(() => undefined));
    return p;
  }

  private q<T extends Element>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el;
  }

  private wireStaticHandlers(): void {
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>("[data-layer]")) {
      btn.addEventListener("click", () => {
        this.state = setLayer(this.state, btn.dataset.layer as ViewState["layer"]);
        this.render();
      });
    }
    this.q<HTMLFormElement>(".plan-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      const form = ev.currentTarget as HTMLFormElement;
      const t = Number((form.elements.namedItem("T") as HTMLInputElement).value);
      const rootField = (form.elements.namedItem("root") as HTMLInputElement).value;
      const returnToRoot = (form.elements.namedItem("return") as HTMLInputElement).checked;
      this.track(this.requestPlan({ T: t, root: Number(rootField), returnToRoot }));
    });
    this.q<HTMLButtonElement>(".banner-retry").addEventListener("click", () => {
      this.track(this.start());
    });
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>("[data-status]")) {
      btn.addEventListener("click", () => {
        this.state = startDraft(this.state, btn.dataset.status as VerdictStatus);
        this.render();
      });
    }
    this.q<HTMLSelectElement>(".label-pick").addEventListener("change", (ev) => {
      const value = (ev.currentTarget as HTMLSelectElement).value as DamageLabel;
      if (value) {
        this.state = setDraftLabel(this.state, value);
        this.render();
      }
    });
    this.q<HTMLButtonElement>(".submit-verdict").addEventListener("click", () => {
      this.track(this.submitDraft());
    });
  }

  async start(): Promise<void> {
    try {
      const [network, damages] = await Promise.all([this.api.network(), this.api.damages()]);
      this.network = network;
      this.damages = damages;
      const coords = network.features.flatMap((f) => f.geometry.coordinates);
      this.viewport = fitViewport(coords, this.mapWidth, this.mapHeight);
      this.setBanner(null);
    } catch (err) {
      this.setBanner(`service unreachable: ${err instanceof Error ? err.message : err}`);
    }
    this.render();
  }

  async refresh(): Promise<void> {
    const [network, damages] = await Promise.all([this.api.network(), this.api.damages()]);
    this.network = network;
    this.damages = damages;
    this.render();
  }

  select(damageId: string | null): void {
    this.state = selectDamage(this.state, damageId);
    this.panelError = "";
    this.render();
  }

  /** Optimistic submit: apply locally, POST, then re-sync from the server;
   * on error roll the local change back and surface the message. */
  async submitDraft(): Promise<void> {
    const draft = this.state.draft;
    if (!draftSubmittable(draft) || !draft) return;
    const author = this.q<HTMLInputElement>(".author").value || "reviewer";
    const before = this.damages;
    this.damages = this.damages.flatMap((d) => {
      if (d.damage_id !== draft.damageId) return [d];
      if (draft.status === "rejected") return [];
      if (draft.status === "relabeled") {
        return [{ ...d, label: draft.correctedLabel as string, score: 1.0, verdict: "relabeled" }];
      }
      return [{ ...d, score: 1.0, verdict: "confirmed" }];
    });
    this.state = clearDraft(this.state);
    this.render();
    try {
      await this.api.postVerdict(draft.damageId, {
        status: draft.status,
        ...(draft.correctedLabel ? { corrected_label: draft.correctedLabel } : {}),
        author,
      });
      await this.refresh();
    } catch (err) {
      this.damages = before;
      this.panelError = err instanceof Error ? err.message : String(err);
      this.render();
    }
  }

  async requestPlan(params: PlanParams): Promise<void> {
    try {
      this.plan = await this.api.plan(params);
      this.planError = "";
      this.state = setLayer(this.state, "plan");
    } catch (err) {
      this.plan = null;
      this.planError = err instanceof ApiError ? `plan request failed: ${err.message}` : String(err);
    }
    this.render();
  }

  private setBanner(message: string | null): void {
    const banner = this.q<HTMLElement>(".banner");
    banner.hidden = message === null;
    this.q<HTMLElement>(".banner-text").textContent = message ?? "";
  }

  render(): void {
    const networkLayer = this.q<SVGGElement>(".layer-network");
    const damagesLayer = this.q<SVGGElement>(".layer-damages");
    const planLayer = this.q<SVGGElement>(".layer-plan");
    if (this.network && this.viewport) {
      const domainMax = severityDomainMax(
        this.network.features.map((f) => f.properties.severity),
      );
      renderNetwork(networkLayer, this.network, this.viewport, domainMax);
      renderLegend(this.q<HTMLElement>(".legend"), domainMax);
      if (this.state.layer !== "severity") {
        renderDamages(
          damagesLayer,
          this.damages,
          this.viewport,
          this.state.selectedDamageId,
          (id) => this.select(id),
        );
      } else {
        damagesLayer.replaceChildren();
      }
      renderPlanOverlay(
        planLayer,
        this.state.layer === "plan" ? this.plan : null,
        this.network,
        this.viewport,
      );
    }
    this.renderPlanReadout();
    this.renderPanel();
  }

  private renderPlanReadout(): void {
    const readout = this.q<HTMLElement>(".plan-readout");
    if (this.plan) {
      const kind = this.plan.exact ? "exact" : "heuristic";
      readout.textContent =
        `c(P) = ${this.plan.total_cost.toFixed(3)}, ` +
        `t(P) = ${this.plan.total_time_s.toFixed(1)} s (${kind})`;
    } else {
      readout.textContent = "";
    }
    this.q<HTMLElement>(".plan-error").textContent = this.planError;
  }

  private renderPanel(): void {
    const panel = this.q<HTMLElement>(".panel");
    const damage = this.damages.find((d) => d.damage_id === this.state.selectedDamageId);
    if (!damage) {
      panel.hidden = true;
      return;
    }
    panel.hidden = false;
    this.q<HTMLElement>(".panel-title").textContent = damage.damage_id;
    const img = this.q<HTMLImageElement>(".damage-image");
    const [dw, dh] = this.imageDisplaySize;
    img.width = dw;
    img.height = dh;
    const missing = this.q<HTMLElement>(".image-missing");
    missing.hidden = true;
    img.onerror = () => {
      missing.hidden = false;
      missing.textContent = `image ${damage.image_id} unavailable (${damage.label}, score ${damage.score})`;
    };
    img.src = this.api.imageUrl(damage.image_id);

    const overlay = this.q<HTMLElement>(".bbox-overlay");
    const applyOverlay = (nw: number, nh: number) =>
      positionBboxOverlay(overlay, damage.bbox, nw, nh, dw, dh);
    if (this.imageNaturalSize) {
      applyOverlay(this.imageNaturalSize[0], this.imageNaturalSize[1]);
    } else {
      img.onload = () => applyOverlay(img.naturalWidth, img.naturalHeight);
    }

    const meta = this.q<HTMLElement>(".damage-meta");
    meta.replaceChildren();
    for (const [k, v] of [
      ["label", damage.label],
      ["score", String(damage.score)],
      ["edge", String(damage.edge_id)],
      ["verdict", damage.verdict ?? "none"],
    ]) {
      const dt = meta.ownerDocument.createElement("dt");
      dt.textContent = k as string;
      const dd = meta.ownerDocument.createElement("dd");
      dd.textContent = v as string;
      meta.append(dt, dd);
    }

    const labelPick = this.q<HTMLSelectElement>(".label-pick");
    labelPick.hidden = this.state.draft?.status !== "relabeled";
    this.q<HTMLButtonElement>(".submit-verdict").disabled = !draftSubmittable(this.state.draft);
    this.q<HTMLElement>(".panel-error").textContent = this.panelError;
  }
}
