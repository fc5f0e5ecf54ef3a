/**
 * Working-canvas rendering: absolutely positioned node cards inside a zoomed
 * layer, membership/hierarchy edges as SVG lines underneath.
 */

import type { CanvasViewModel, RenderedNode } from "./state.js";

export interface CanvasCallbacks {
  onSelectNode?: (nodeId: string) => void;
  onActivateEvidence?: (nodeId: string) => void;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderCanvas(
  viewModel: CanvasViewModel,
  root: HTMLElement,
  callbacks: CanvasCallbacks = {},
): void {
  root.textContent = "";
  root.classList.add("tc-canvas");

  const layer = root.ownerDocument.createElement("div");
  layer.className = "tc-canvas-layer";
  layer.style.transform = `scale(${viewModel.zoom})`;
  layer.style.transformOrigin = "0 0";

  layer.appendChild(renderEdges(viewModel, root.ownerDocument));
  for (const node of viewModel.renderedNodes()) {
    layer.appendChild(renderNode(node, root.ownerDocument, callbacks));
  }
  root.appendChild(layer);
}

function renderNode(
  node: RenderedNode,
  doc: Document,
  callbacks: CanvasCallbacks,
): HTMLElement {
  const card = doc.createElement("div");
  card.className = `tc-node tc-node-${node.kind}`;
  card.dataset.nodeId = node.nodeId;
  card.dataset.tier = node.tier;
  card.style.left = `${node.position[0]}px`;
  card.style.top = `${node.position[1]}px`;
  if (node.highlighted) {
    card.classList.add("tc-highlighted");
  }
  if (node.selected) {
    card.classList.add("tc-selected");
  }

  if (node.aiBadge) {
    const badge = doc.createElement("span");
    badge.className = "tc-ai-badge";
    badge.title = "created from an accepted AI suggestion";
    badge.textContent = "AI";
    card.appendChild(badge);
  }

  const text = doc.createElement("div");
  text.className = "tc-node-text";
  text.textContent = node.text;
  card.appendChild(text);

  card.addEventListener("click", () => {
    callbacks.onSelectNode?.(node.nodeId);
    if (node.kind === "evidence") {
      callbacks.onActivateEvidence?.(node.nodeId);
    }
  });
  return card;
}

function renderEdges(viewModel: CanvasViewModel, doc: Document): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "tc-edges");
  const byId = new Map(
    (viewModel.workspace?.nodes ?? []).map((n) => [n.node_id, n] as const),
  );
  for (const edge of viewModel.edges()) {
    const from = byId.get(edge.from);
    const to = byId.get(edge.to);
    if (!from || !to) continue;
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("class", `tc-edge tc-edge-${edge.kind}`);
    line.setAttribute("data-edge-id", edge.edge_id);
    line.setAttribute("x1", String(from.position[0]));
    line.setAttribute("y1", String(from.position[1]));
    line.setAttribute("x2", String(to.position[0]));
    line.setAttribute("y2", String(to.position[1]));
    svg.appendChild(line);
  }
  return svg;
}
