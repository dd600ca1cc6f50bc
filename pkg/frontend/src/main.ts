/** Browser entry point: connect to the service on the same origin. */

import { createClient } from "./api";
import { createApp } from "./app";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
const app = createApp(root, createClient(""), {});
void app.refresh();
