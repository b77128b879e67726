import { ApiClient } from "./api.js";
import { SessionStore } from "./state.js";
import { mount } from "./ui.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const store = new SessionStore(new ApiClient(""));
mount(root, store);
void store.loadScheme();
