/**
 * View model and the pure transitions the page logic runs on.
 *
 * Everything here is reconstructable from GET /sessions/{id}: fromSession
 * rebuilds the exact same view after a refresh. The provider API key lives in
 * sessionStorage only, so it dies with the tab.
 */

import type {
  DiagnosticInfo,
  GraphView,
  MutationResponse,
  SessionView,
  VersionInfo,
} from "./api.js";

export type Phase = "idle" | "working" | "ready" | "failed" | "error";

export interface VersionSummary {
  version: number;
  status: string;
  iterations: number;
  autoFixed: boolean;
  labels: string[];
}

export interface ViewModel {
  sessionId: string | null;
  phase: Phase;
  status: string;
  currentVersion: number;
  versions: VersionSummary[];
  graph: GraphView | null;
  logLines: string[];
  changedNodes: number | null; // label diff against the previous version
  banner: string | null;
  inFlight: boolean;
}

export interface FormState {
  description: string;
  provider: string;
  modelName: string;
  apiKeyEnv: string;
  apiKey: string;
}

export function initialView(): ViewModel {
  return {
    sessionId: null,
    phase: "idle",
    status: "",
    currentVersion: 0,
    versions: [],
    graph: null,
    logLines: [],
    changedNodes: null,
    banner: null,
    inFlight: false,
  };
}

export function canSubmit(form: FormState, view: ViewModel): boolean {
  if (view.inFlight) return false;
  if (!form.description.trim() || !form.provider.trim() || !form.modelName.trim()) {
    return false;
  }
  // hosted vendors need a key (value or env var name); the mock replays a script
  if (form.provider.trim() !== "mock" && !form.apiKey.trim() && !form.apiKeyEnv.trim()) {
    return false;
  }
  return true;
}

export function canSendFeedback(text: string, view: ViewModel): boolean {
  return (
    !view.inFlight &&
    text.trim().length > 0 &&
    view.sessionId !== null &&
    (view.status === "succeeded" || view.status === "succeeded_with_autofix")
  );
}

export function canExport(view: ViewModel): boolean {
  return !view.inFlight && view.sessionId !== null && view.graph !== null;
}

/** Labels carried by graph nodes; gateways and events have none. */
export function nodeLabels(graph: GraphView | null): string[] {
  if (!graph) return [];
  return graph.nodes.map((node) => node.label).filter((label) => label !== "");
}

/** Size of the symmetric difference between two versions' label sets. */
export function changedNodeCount(before: GraphView | null, after: GraphView | null): number {
  const a = new Set(nodeLabels(before));
  const b = new Set(nodeLabels(after));
  let changed = 0;
  for (const label of a) if (!b.has(label)) changed += 1;
  for (const label of b) if (!a.has(label)) changed += 1;
  return changed;
}

function diagnosticLine(diagnostic: DiagnosticInfo): string {
  const where = diagnostic.path ? ` at ${diagnostic.path}` : "";
  return `${diagnostic.code}${where}: ${diagnostic.message}`;
}

function versionLogLines(entry: VersionInfo): string[] {
  const lines: string[] = [];
  for (const step of entry.timeline) {
    const head = `v${entry.version} attempt ${step.attempt}`;
    if (step.diagnostics.length === 0) {
      lines.push(`${head}: ok`);
    } else {
      for (const diagnostic of step.diagnostics) {
        lines.push(`${head}: ${diagnosticLine(diagnostic)}`);
      }
    }
  }
  return lines;
}

function summarize(entry: VersionInfo): VersionSummary {
  return {
    version: entry.version,
    status: entry.status,
    iterations: entry.iterations,
    autoFixed: entry.auto_fixed,
    labels: nodeLabels(entry.model?.graph ?? null),
  };
}

function failureBanner(status: string, diagnostics: DiagnosticInfo[]): string {
  const last = diagnostics[diagnostics.length - 1];
  const reason = last ? diagnosticLine(last) : "no diagnostics reported";
  return `generation ${status}: ${reason}`;
}

/** Rebuilds the whole view from the session resource (refresh-safe). */
export function fromSession(session: SessionView): ViewModel {
  const versions = session.versions;
  const current = versions[versions.length - 1] ?? null;
  const previous = versions.length > 1 ? versions[versions.length - 2] : null;
  const graph = current?.model?.graph ?? null;
  const succeeded =
    session.status === "succeeded" || session.status === "succeeded_with_autofix";
  const lastTimeline = current?.timeline ?? [];
  const lastDiagnostics = lastTimeline[lastTimeline.length - 1]?.diagnostics ?? [];
  return {
    sessionId: session.session_id,
    phase: succeeded ? "ready" : "failed",
    status: session.status,
    currentVersion: session.current_version,
    versions: versions.map(summarize),
    graph,
    logLines: versions.flatMap(versionLogLines),
    changedNodes: previous
      ? changedNodeCount(previous.model?.graph ?? null, graph)
      : null,
    banner: succeeded ? null : failureBanner(session.status, lastDiagnostics),
    inFlight: false,
  };
}

/** Folds a POST response into the view; failed mutations keep the old model. */
export function applyMutation(view: ViewModel, response: MutationResponse): ViewModel {
  const succeeded =
    response.status === "succeeded" || response.status === "succeeded_with_autofix";
  if (!succeeded) {
    return {
      ...view,
      sessionId: response.session_id,
      phase: "failed",
      status: view.sessionId ? view.status : response.status,
      banner: failureBanner(response.status, response.diagnostics),
      inFlight: false,
    };
  }
  const graph = response.model?.graph ?? null;
  return {
    ...view,
    sessionId: response.session_id,
    phase: "ready",
    status: response.status,
    currentVersion: response.version,
    graph,
    changedNodes: view.graph ? changedNodeCount(view.graph, graph) : null,
    banner: null,
    inFlight: false,
  };
}

export function withError(view: ViewModel, message: string): ViewModel {
  return { ...view, phase: "error", banner: message, inFlight: false };
}

// -- API key handling: tab-scoped storage only ------------------------------

const KEY_SLOT = "powlgen.apiKey";

export const keyStore = {
  save(value: string): void {
    if (value) sessionStorage.setItem(KEY_SLOT, value);
    else sessionStorage.removeItem(KEY_SLOT);
  },
  load(): string {
    return sessionStorage.getItem(KEY_SLOT) ?? "";
  },
  clear(): void {
    sessionStorage.removeItem(KEY_SLOT);
  },
};
