/** Browser entry point: mount the app on #app against the same origin. */

import { ApiClient } from "./api.js";
import { createApp } from "./main.js";

const root = document.getElementById("app");
if (root !== null) {
  void createApp(root, new ApiClient()).init();
}
