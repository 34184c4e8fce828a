/**
 * Page wiring: form handling, one in-flight request at a time, polling the
 * session resource, rendering, and export downloads.
 */

import { ApiError, StudioClient } from "./api.js";
import type { ExportDocument, ExportFormat, SessionView } from "./api.js";
import { layoutGraph } from "./layout.js";
import {
  canExport,
  canSendFeedback,
  canSubmit,
  fromSession,
  initialView,
  keyStore,
  withError,
} from "./state.js";
import type { FormState, ViewModel } from "./state.js";
import {
  renderBadges,
  renderBanner,
  renderGraph,
  renderHistory,
  renderLog,
  renderStatus,
} from "./render.js";

const POLL_INTERVAL_MS = 1500;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function readHashSession(): string | null {
  const match = window.location.hash.match(/^#s=(.+)$/);
  return match ? decodeURIComponent(match[1]) : null;
}

function writeHashSession(sessionId: string): void {
  window.history.replaceState(null, "", `#s=${encodeURIComponent(sessionId)}`);
}

export function startApp(): void {
  const client = new StudioClient("");

  const description = el<HTMLTextAreaElement>("description");
  const provider = el<HTMLSelectElement>("provider");
  const modelName = el<HTMLInputElement>("model-name");
  const apiKeyEnv = el<HTMLInputElement>("api-key-env");
  const apiKey = el<HTMLInputElement>("api-key");
  const submit = el<HTMLButtonElement>("submit");
  const feedbackText = el<HTMLTextAreaElement>("feedback-text");
  const sendFeedback = el<HTMLButtonElement>("send-feedback");
  const graphSvg = el<HTMLElement>("graph") as unknown as SVGSVGElement;
  const history = el<HTMLElement>("history");
  const log = el<HTMLElement>("log");
  const versionBadge = el<HTMLElement>("version-badge");
  const diffBadge = el<HTMLElement>("diff-badge");
  const banner = el<HTMLElement>("banner");
  const status = el<HTMLElement>("status");
  const exportButtons = Array.from(
    document.querySelectorAll<HTMLButtonElement>("button[data-format]"),
  );

  let view: ViewModel = initialView();
  let session: SessionView | null = null;
  let selectedVersion: number | null = null;
  let pollTimer: ReturnType<typeof setInterval> | null = null;

  apiKey.value = keyStore.load();
  apiKey.addEventListener("input", () => keyStore.save(apiKey.value));

  function readForm(): FormState {
    return {
      description: description.value,
      provider: provider.value,
      modelName: modelName.value,
      apiKeyEnv: apiKeyEnv.value,
      apiKey: apiKey.value,
    };
  }

  function graphForSelection() {
    if (session && selectedVersion !== null) {
      const entry = session.versions.find((v) => v.version === selectedVersion);
      if (entry?.model) return entry.model.graph;
    }
    return view.graph;
  }

  function renderAll(): void {
    renderStatus(status, view);
    renderBanner(banner, view);
    renderBadges(versionBadge, diffBadge, view);
    renderLog(log, view.logLines);
    renderHistory(history, view.versions, selectedVersion ?? view.currentVersion, (version) => {
      selectedVersion = version;
      renderAll();
    });
    const graph = graphForSelection();
    if (graph) renderGraph(graphSvg, layoutGraph(graph));
    else graphSvg.replaceChildren();

    submit.disabled = !canSubmit(readForm(), view);
    sendFeedback.disabled = !canSendFeedback(feedbackText.value, view);
    const exportable = canExport(view);
    for (const button of exportButtons) button.disabled = !exportable;
  }

  async function refreshFromServer(sessionId: string): Promise<void> {
    session = await client.getSession(sessionId);
    const wasInFlight = view.inFlight;
    view = { ...fromSession(session), inFlight: wasInFlight };
    renderAll();
  }

  function startPolling(sessionId: string | null): void {
    stopPolling();
    pollTimer = setInterval(() => {
      if (!sessionId) return;
      // a session that is still generating has no resource yet; ignore 404s
      refreshFromServer(sessionId).catch(() => undefined);
    }, POLL_INTERVAL_MS);
  }

  function stopPolling(): void {
    if (pollTimer !== null) clearInterval(pollTimer);
    pollTimer = null;
  }

  function failWith(error: unknown): void {
    const message =
      error instanceof ApiError ? error.detail : error instanceof Error ? error.message : String(error);
    view = withError(view, message);
    renderAll();
  }

  async function runExclusive(sessionId: string | null, work: () => Promise<string>): Promise<void> {
    if (view.inFlight) return;
    view = { ...view, inFlight: true };
    renderAll();
    startPolling(sessionId);
    try {
      const finalId = await work();
      stopPolling();
      view = { ...view, inFlight: false };
      writeHashSession(finalId);
      await refreshFromServer(finalId);
    } catch (error) {
      stopPolling();
      failWith(error);
    }
  }

  submit.addEventListener("click", () => {
    const form = readForm();
    if (!canSubmit(form, view)) return;
    selectedVersion = null;
    void runExclusive(null, async () => {
      const response = await client.createSession(form.description, {
        provider: form.provider,
        modelName: form.modelName,
        apiKeyEnv: form.apiKeyEnv || undefined,
        apiKey: form.apiKey || undefined,
      });
      return response.session_id;
    });
  });

  sendFeedback.addEventListener("click", () => {
    const sessionId = view.sessionId;
    if (!sessionId || !canSendFeedback(feedbackText.value, view)) return;
    const text = feedbackText.value;
    selectedVersion = null;
    void runExclusive(sessionId, async () => {
      await client.sendFeedback(sessionId, text, apiKey.value || undefined);
      feedbackText.value = "";
      return sessionId;
    });
  });

  function triggerDownload(doc: ExportDocument): void {
    const blob = new Blob([doc.bytes.buffer as ArrayBuffer], { type: doc.mediaType });
    const url = URL.createObjectURL(blob);
    const anchor = document.createElement("a");
    anchor.href = url;
    anchor.download = doc.filename;
    document.body.appendChild(anchor);
    anchor.click();
    anchor.remove();
    URL.revokeObjectURL(url);
  }

  for (const button of exportButtons) {
    button.addEventListener("click", () => {
      const sessionId = view.sessionId;
      if (!sessionId || !canExport(view)) return;
      const format = button.dataset.format as ExportFormat;
      const version =
        selectedVersion !== null && selectedVersion !== view.currentVersion
          ? selectedVersion
          : undefined;
      client
        .exportDocument(sessionId, format, version)
        .then(triggerDownload)
        .catch(failWith);
    });
  }

  for (const input of [description, provider, modelName, apiKeyEnv, apiKey, feedbackText]) {
    input.addEventListener("input", renderAll);
    input.addEventListener("change", renderAll);
  }

  const existing = readHashSession();
  if (existing) {
    refreshFromServer(existing).catch(failWith);
  }
  renderAll();
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (document.readyState === "loading") {
    window.addEventListener("DOMContentLoaded", () => startApp());
  } else if (document.getElementById("submit")) {
    startApp();
  }
}
