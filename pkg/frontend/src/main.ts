import { SurveyApi } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "";
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new App(new SurveyApi(base), root);
void app.start();
