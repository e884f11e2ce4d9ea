import { AnalysisClient } from "./api.js";
import { EditorApp } from "./editor.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");

// Same-origin by default; point at a remote service with ?service=http://host:port
const serviceUrl = new URLSearchParams(window.location.search).get("service") ?? "";
const client = new AnalysisClient(serviceUrl);
const app = new EditorApp(root, client);

void client.health().then((ok) => {
  if (!ok) {
    const banner = document.getElementById("banner");
    if (banner) {
      banner.textContent =
        "analysis service unreachable - run `flowcheck serve --port 8000` " +
        "and reload, or pass ?service=http://127.0.0.1:8000";
      banner.style.display = "block";
    }
  }
});

// Handy for debugging from the console.
(window as unknown as { flowcheck: EditorApp }).flowcheck = app;
