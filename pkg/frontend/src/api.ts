import type { DamagePoint, NetworkDoc, PlanDoc, PlanParams, VerdictBody } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: unknown };
      if (body && body.detail) detail = String(body.detail);
    } catch {
      // keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

/** Thin typed client for the survey service. */
export class SurveyApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = globalThis.fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  network(): Promise<NetworkDoc> {
    return this.fetchFn(this.url("/api/network")).then((r) => expectJson<NetworkDoc>(r));
  }

  damages(filter?: { bbox?: string; label?: string }): Promise<DamagePoint[]> {
    const params = new URLSearchParams();
    if (filter?.bbox) params.set("bbox", filter.bbox);
    if (filter?.label) params.set("label", filter.label);
    const qs = params.toString();
    return this.fetchFn(this.url("/api/damages" + (qs ? `?${qs}` : ""))).then((r) =>
      expectJson<DamagePoint[]>(r),
    );
  }

  imageUrl(imageId: string): string {
    return this.url(`/api/images/${encodeURIComponent(imageId)}`);
  }

  /** Damage ids contain '#', so the path segment must be percent-encoded. */
  postVerdict(damageId: string, body: VerdictBody): Promise<Record<string, unknown>> {
    return this.fetchFn(this.url(`/api/damages/${encodeURIComponent(damageId)}/verdict`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => expectJson<Record<string, unknown>>(r));
  }

  plan(params: PlanParams): Promise<PlanDoc> {
    const qs = new URLSearchParams({
      T: String(params.T),
      root: String(params.root),
      return: String(params.returnToRoot),
    });
    return this.fetchFn(this.url(`/api/plan?${qs}`)).then((r) => expectJson<PlanDoc>(r));
  }
}
