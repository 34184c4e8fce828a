/**
 * DOM rendering: SVG process graph plus the shell widgets (history drawer,
 * iteration log, badges, banner). No framework; plain element building.
 */

import type { GraphLayout, PlacedNode } from "./layout.js";
import type { VersionSummary, ViewModel } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  name: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) el.setAttribute(key, value);
  return el;
}

function truncate(label: string, max = 20): string {
  return label.length > max ? label.slice(0, max - 1) + "…" : label;
}

function gatewayGlyph(role: string): string {
  return role.startsWith("xor") ? "×" : "+";
}

function nodeShape(node: PlacedNode): SVGElement {
  const group = svgEl("g", { class: `node ${node.category}`, "data-id": node.id });
  const cx = node.x + node.width / 2;
  const cy = node.y + node.height / 2;
  if (node.category === "event") {
    group.appendChild(
      svgEl("circle", {
        cx: String(cx),
        cy: String(cy),
        r: String(node.width / 2),
        class: node.role === "end" ? "event-end" : "event-start",
      }),
    );
  } else if (node.category === "gateway") {
    const points = [
      `${cx},${node.y}`,
      `${node.x + node.width},${cy}`,
      `${cx},${node.y + node.height}`,
      `${node.x},${cy}`,
    ].join(" ");
    group.appendChild(svgEl("polygon", { points, class: "gateway-shape" }));
    const glyph = svgEl("text", {
      x: String(cx),
      y: String(cy),
      class: "gateway-glyph",
      "text-anchor": "middle",
      "dominant-baseline": "central",
    });
    glyph.textContent = gatewayGlyph(node.role);
    group.appendChild(glyph);
  } else {
    group.appendChild(
      svgEl("rect", {
        x: String(node.x),
        y: String(node.y),
        width: String(node.width),
        height: String(node.height),
        rx: "8",
        class: "task-shape",
      }),
    );
    const text = svgEl("text", {
      x: String(cx),
      y: String(cy),
      class: "task-label",
      "text-anchor": "middle",
      "dominant-baseline": "central",
    });
    text.textContent = truncate(node.label);
    group.appendChild(text);
  }
  if (node.label) {
    const title = svgEl("title", {});
    title.textContent = node.label;
    group.appendChild(title);
  }
  return group;
}

/** Replaces the SVG contents with the laid-out graph. */
export function renderGraph(svg: SVGSVGElement, layout: GraphLayout): void {
  svg.replaceChildren();
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));

  const defs = svgEl("defs", {});
  const marker = svgEl("marker", {
    id: "arrow",
    markerWidth: "9",
    markerHeight: "9",
    refX: "8",
    refY: "4.5",
    orient: "auto",
  });
  marker.appendChild(svgEl("path", { d: "M0,0 L9,4.5 L0,9 z", class: "arrow-head" }));
  defs.appendChild(marker);
  svg.appendChild(defs);

  for (const edge of layout.edges) {
    if (edge.points.length === 0) continue;
    svg.appendChild(
      svgEl("polyline", {
        points: edge.points.map((p) => `${p.x},${p.y}`).join(" "),
        class: edge.back ? "flow flow-back" : "flow",
        "marker-end": "url(#arrow)",
        "data-source": edge.source,
        "data-target": edge.target,
      }),
    );
  }
  for (const node of layout.nodes) svg.appendChild(nodeShape(node));
}

/** Lists v1..vn; the selected entry is highlighted and clicks call back. */
export function renderHistory(
  container: HTMLElement,
  versions: VersionSummary[],
  selected: number,
  onSelect: (version: number) => void,
): void {
  container.replaceChildren();
  for (const entry of versions) {
    const item = document.createElement("button");
    item.type = "button";
    item.className = "history-entry" + (entry.version === selected ? " selected" : "");
    item.dataset.version = String(entry.version);
    const fixed = entry.autoFixed ? ", auto-fixed" : "";
    item.textContent = `v${entry.version} · ${entry.status} (${entry.iterations} iterations${fixed})`;
    item.addEventListener("click", () => onSelect(entry.version));
    container.appendChild(item);
  }
}

export function renderLog(container: HTMLElement, lines: string[]): void {
  container.textContent = lines.join("\n");
  container.scrollTop = container.scrollHeight;
}

export function renderBadges(
  versionBadge: HTMLElement,
  diffBadge: HTMLElement,
  view: ViewModel,
): void {
  versionBadge.textContent = view.currentVersion > 0 ? `v${view.currentVersion}` : "–";
  if (view.changedNodes === null) {
    diffBadge.hidden = true;
    diffBadge.textContent = "";
  } else {
    diffBadge.hidden = false;
    diffBadge.textContent = `${view.changedNodes} node${view.changedNodes === 1 ? "" : "s"} changed`;
  }
}

export function renderBanner(banner: HTMLElement, view: ViewModel): void {
  if (view.banner) {
    banner.hidden = false;
    banner.textContent = view.banner;
    banner.className = `banner ${view.phase}`;
  } else {
    banner.hidden = true;
    banner.textContent = "";
  }
}

export function renderStatus(statusEl: HTMLElement, view: ViewModel): void {
  if (view.inFlight) {
    statusEl.textContent = "working…";
  } else if (view.sessionId) {
    statusEl.textContent = `${view.status} · session ${view.sessionId}`;
  } else {
    statusEl.textContent = "no session";
  }
}
