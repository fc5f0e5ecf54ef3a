/**
 * Browser entry point. Reads the API base URL and workspace id from query
 * parameters (`?api=...&workspace=...&route=codebook`), creating a fresh
 * workspace when none is given.
 */

import { ApiClient } from "./api.js";
import { WorkspaceApp } from "./app.js";

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8000";
  const route = params.get("route") === "codebook" ? "codebook" : "canvas";
  const client = new ApiClient(base);

  let workspaceId = params.get("workspace");
  if (!workspaceId) {
    const created = await client.createWorkspace();
    workspaceId = created.workspace_id;
  }

  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app element");
  }
  const app = await WorkspaceApp.bind(client, workspaceId, root, { route });

  root.addEventListener("wheel", (event) => {
    if (!event.ctrlKey) return;
    event.preventDefault();
    const factor = event.deltaY < 0 ? 1.1 : 1 / 1.1;
    app.applyZoom(app.viewModel.zoom * factor);
  });
}

void start();
