import { HttpSessionApi } from "./api.js";
import { ExplorerApp } from "./app.js";

/** Browser bootstrap: create a session for the configured pipeline and
 * mount the explorer. The backend address and config path come from the
 * query string: ?api=http://127.0.0.1:8000&config=fixtures/config.json */
async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new HttpSessionApi(params.get("api") ?? "");
  const configPath = params.get("config") ?? "fixtures/config.json";
  const mount = document.getElementById("explorer");
  if (!mount) {
    throw new Error("missing #explorer mount point");
  }
  mount.textContent = "creating session...";
  const sessionId = await api.createSession(configPath);
  const app = new ExplorerApp(api, sessionId, mount);
  await app.load();
}

void boot();
