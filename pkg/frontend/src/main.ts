import { ApiClient } from "./api.js";
import { App } from "./app.js";

// The API base defaults to the page's own origin; a cross-origin
// service is reached with ?api=http://host:port (no trailing slash).
const params = new URLSearchParams(window.location.search);
const apiBase = (params.get("api") ?? "").replace(/\/+$/, "");

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const app = new App(root, new ApiClient(apiBase), window);
void app.render();
