/** The acceptance interaction script against the real service:
 * load map -> select a damage -> reject it -> the edge's severity drops to
 * zero -> request a plan. Runs in jsdom with real HTTP to a spawned
 * roadsurvey server over a freshly generated fixture project.
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SurveyApi } from "../src/api.js";
import { App } from "../src/app.js";
import { NEUTRAL_COLOR } from "../src/colorscale.js";
import { scaleBbox } from "../src/geometry.js";

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "../..");
const PYTHON = process.env.PYTHON ?? "python3";
const NATURAL: [number, number] = [2032, 1520];
const DISPLAY: [number, number] = [508, 380];

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
    srv.on("error", reject);
  });
}

async function waitForService(base: string, proc: ChildProcess): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) throw new Error(`server exited with ${proc.exitCode}`);
    try {
      const resp = await fetch(base + "/api/network");
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("service did not come up in time");
}

describe("interaction script against the live service", () => {
  let proc: ChildProcess;
  let base: string;
  let projectDir: string;

  beforeAll(async () => {
    projectDir = mkdtempSync(path.join(tmpdir(), "survey-ui-"));
    execFileSync(PYTHON, [
      "-c",
      "import sys; sys.path.insert(0, sys.argv[2]); import synthfix, pathlib; " +
        "root = synthfix.build_project(sys.argv[1]); (root / 'verdicts.jsonl').unlink()",
      projectDir,
      path.join(REPO_ROOT, "tests"),
    ]);
    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    proc = spawn(PYTHON, ["-m", "roadsurvey", "serve", "--project", projectDir, "--port", String(port)], {
      stdio: "ignore",
    });
    await waitForService(base, proc);
  });

  afterAll(() => {
    proc?.kill("SIGKILL");
    rmSync(projectDir, { recursive: true, force: true });
  });

  it("reject drops the edge severity to zero and the plan request succeeds", async () => {
    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const app = new App(new SurveyApi(base), root, {
      imageNaturalSize: NATURAL,
      imageDisplaySize: DISPLAY,
    });
    await app.start();
    expect(app.network).not.toBeNull();
    expect(root.querySelectorAll(".layer-network polyline").length).toBe(
      app.network!.features.length,
    );

    // pick a damage alone on its edge so the rejection zeroes that edge
    const perEdge = new Map<number, number>();
    for (const d of app.damages) perEdge.set(d.edge_id!, (perEdge.get(d.edge_id!) ?? 0) + 1);
    const target = app.damages.find((d) => perEdge.get(d.edge_id!) === 1)!;
    expect(target).toBeTruthy();

    (root.querySelector("[data-layer=damages]") as HTMLButtonElement).click();
    const dot = root.querySelector(
      `.layer-damages circle[data-damage-id="${target.damage_id}"]`,
    ) as SVGCircleElement;
    dot.dispatchEvent(new MouseEvent("click"));
    expect((root.querySelector(".panel") as HTMLElement).hidden).toBe(false);

    // bbox overlay matches the detection bbox scaled to the displayed size
    const overlay = root.querySelector(".bbox-overlay") as HTMLElement;
    const want = scaleBbox(target.bbox, NATURAL[0], NATURAL[1], DISPLAY[0], DISPLAY[1]);
    expect(Math.abs(parseFloat(overlay.style.left) - want.left)).toBeLessThanOrEqual(1);
    expect(Math.abs(parseFloat(overlay.style.top) - want.top)).toBeLessThanOrEqual(1);
    expect(Math.abs(parseFloat(overlay.style.width) - want.width)).toBeLessThanOrEqual(1);
    expect(Math.abs(parseFloat(overlay.style.height) - want.height)).toBeLessThanOrEqual(1);

    // the real image bytes are reachable at the url the panel uses
    const imgResp = await fetch((root.querySelector(".damage-image") as HTMLImageElement).src);
    expect(imgResp.status).toBe(200);
    expect(imgResp.headers.get("content-type")).toBe("image/jpeg");

    (root.querySelector("[data-status=rejected]") as HTMLButtonElement).click();
    (root.querySelector(".submit-verdict") as HTMLButtonElement).click();
    await app.whenIdle();

    const feature = app.network!.features.find((f) => f.properties.edge_id === target.edge_id)!;
    expect(feature.properties.severity).toBe(0);
    const line = root.querySelector(
      `.layer-network polyline[data-edge-id="${target.edge_id}"]`,
    ) as SVGPolylineElement;
    expect(line.getAttribute("stroke")).toBe(NEUTRAL_COLOR);

    // plan request over the live service; the fixture's lowest node id is 1
    await app.requestPlan({ T: 900, root: 1, returnToRoot: false });
    expect(app.plan).not.toBeNull();
    expect(app.plan!.total_time_s).toBeLessThan(900);
    const readout = (root.querySelector(".plan-readout") as HTMLElement).textContent!;
    expect(readout).toContain("c(P)");
  });
});
