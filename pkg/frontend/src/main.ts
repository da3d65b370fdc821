import { VirtdocApi } from "./api.js";
import { createKioskApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

createKioskApp(root, new VirtdocApi(baseUrl));
