/**
 * End-to-end against the real studio service with a scripted mock provider:
 * submit renders a graph with the right task count, feedback bumps the
 * version, and export downloads match direct endpoint fetches byte for byte.
 */
import { type ChildProcess, spawn } from "node:child_process";
import { existsSync, mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { JSDOM } from "jsdom";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { StudioClient } from "../src/api.js";
import { layoutGraph } from "../src/layout.js";
import { renderGraph } from "../src/render.js";
import { changedNodeCount, fromSession } from "../src/state.js";

const PORT = 8930 + (process.pid % 60);
const BASE = `http://127.0.0.1:${PORT}`;
const DIST = fileURLToPath(new URL("../dist", import.meta.url));

function fenced(body: string): string {
  return "```python\n" + body + "\n```";
}

const SCRIPT_V1 = `from utils.model_generation import ModelGenerator
gen = ModelGenerator()
a = gen.activity('Receive order')
b = gen.activity('Check stock')
c = gen.activity('Ship order')
final_model = gen.partial_order(dependencies=[(a, b), (b, c)])`;

const SCRIPT_V2 = `from utils.model_generation import ModelGenerator
gen = ModelGenerator()
a = gen.activity('Receive order')
b = gen.activity('Check stock')
c = gen.activity('Ship order')
d = gen.activity('Notify customer')
final_model = gen.partial_order(dependencies=[(a, b), (b, c), (c, d)])`;

const DESCRIPTION = "Orders are received, stock is checked, then the order ships.";

let service: ChildProcess | null = null;
let stderrLog = "";
const client = new StudioClient(BASE, (url, init) => fetch(url, init));
let sessionId = "";

const dom = new JSDOM("<!doctype html><html><body></body></html>");

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

beforeAll(async () => {
  (globalThis as Record<string, unknown>).document = dom.window.document;
  const workDir = mkdtempSync(join(tmpdir(), "powlgen-ui-e2e-"));
  const scriptPath = join(workDir, "responses.json");
  writeFileSync(scriptPath, JSON.stringify([fenced(SCRIPT_V1), fenced(SCRIPT_V2)]));
  service = spawn(
    "python3",
    [
      "-m",
      "uvicorn",
      "powlgen.service.app:create_app",
      "--factory",
      "--host",
      "127.0.0.1",
      "--port",
      String(PORT),
      "--log-level",
      "warning",
    ],
    {
      cwd: workDir,
      env: {
        ...process.env,
        POWLGEN_DATA_DIR: join(workDir, "sessions"),
        POWLGEN_DEFAULT_PROVIDER: "mock",
        POWLGEN_DEFAULT_MODEL: "scripted",
        POWLGEN_MOCK_SCRIPT: scriptPath,
        POWLGEN_UI_DIR: DIST,
      },
      stdio: ["ignore", "ignore", "pipe"],
    },
  );
  service.stderr?.on("data", (chunk: Buffer) => {
    stderrLog += chunk.toString();
  });
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const health = await fetch(`${BASE}/healthz`);
      if (health.ok) return;
    } catch {
      // not listening yet
    }
    await sleep(200);
  }
  throw new Error(`service did not come up on ${BASE}\n${stderrLog}`);
});

afterAll(() => {
  delete (globalThis as Record<string, unknown>).document;
  service?.kill("SIGTERM");
});

describe("studio UI end to end", () => {
  it("submit renders a graph with the correct task count", async () => {
    const response = await client.createSession(DESCRIPTION, {
      provider: "mock",
      modelName: "scripted",
    });
    expect(response.status).toBe("succeeded");
    expect(response.version).toBe(1);
    sessionId = response.session_id;

    const view = fromSession(await client.getSession(sessionId));
    expect(view.graph).not.toBeNull();
    const svg = dom.window.document.createElementNS(
      "http://www.w3.org/2000/svg",
      "svg",
    ) as unknown as SVGSVGElement;
    renderGraph(svg, layoutGraph(view.graph!));
    const tasks = svg.querySelectorAll("rect.task-shape");
    expect(tasks).toHaveLength(3);
    const labels = Array.from(svg.querySelectorAll("text.task-label")).map(
      (el) => el.textContent,
    );
    expect(new Set(labels)).toEqual(new Set(["Receive order", "Check stock", "Ship order"]));
  });

  it("feedback increments the version and the diff badge counts one node", async () => {
    const before = fromSession(await client.getSession(sessionId));
    const response = await client.sendFeedback(sessionId, "Also notify the customer.");
    expect(response.status).toBe("succeeded");
    expect(response.version).toBe(2);

    const view = fromSession(await client.getSession(sessionId));
    expect(view.currentVersion).toBe(2);
    expect(view.versions.map((v) => v.version)).toEqual([1, 2]);
    expect(changedNodeCount(before.graph, view.graph)).toBe(1);
    expect(view.changedNodes).toBe(1);

    const svg = dom.window.document.createElementNS(
      "http://www.w3.org/2000/svg",
      "svg",
    ) as unknown as SVGSVGElement;
    renderGraph(svg, layoutGraph(view.graph!));
    expect(svg.querySelectorAll("rect.task-shape")).toHaveLength(4);
  });

  it("export buttons yield documents byte-identical to direct endpoint calls", async () => {
    const extensions = { bpmn: "bpmn", pnml: "pnml", dot: "dot", script: "py" } as const;
    for (const format of ["bpmn", "pnml", "dot", "script"] as const) {
      const doc = await client.exportDocument(sessionId, format);
      expect(doc.filename).toBe(`model_v2.${extensions[format]}`);
      const direct = await fetch(client.exportUrl(sessionId, format));
      expect(direct.status).toBe(200);
      const directBytes = Buffer.from(await direct.arrayBuffer());
      expect(directBytes.equals(Buffer.from(doc.bytes))).toBe(true);
      expect(doc.bytes.length).toBeGreaterThan(0);
    }
  });

  it("exports an earlier version on request", async () => {
    const v1 = await client.exportDocument(sessionId, "pnml", 1);
    const v2 = await client.exportDocument(sessionId, "pnml", 2);
    expect(v1.filename).toBe("model_v1.pnml");
    expect(new TextDecoder().decode(v1.bytes)).not.toContain("Notify customer");
    expect(new TextDecoder().decode(v2.bytes)).toContain("Notify customer");
  });

  it("serves the built shell under /ui", async () => {
    if (!existsSync(join(DIST, "index.html"))) return; // run `npm run build` first
    const page = await fetch(`${BASE}/ui/`);
    expect(page.status).toBe(200);
    const html = await page.text();
    expect(html).toContain('id="graph"');
    const script = await fetch(`${BASE}/ui/main.js`);
    expect(script.status).toBe(200);
  });
});
