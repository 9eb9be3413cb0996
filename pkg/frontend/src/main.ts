/** Browser entry point: mount the workbench against the serving origin. */

import { WorkbenchApi } from "./api.js";
import { WorkbenchApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const api = new WorkbenchApi(window.location.origin);
const app = new WorkbenchApp(root, api);
void app.start();
