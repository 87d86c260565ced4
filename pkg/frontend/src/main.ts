import { App } from "./app.js";
import { SessionApi } from "./api.js";

const serverBase =
  new URLSearchParams(window.location.search).get("server") ?? "http://127.0.0.1:8040";

const app = new App(document.getElementById("app") as HTMLElement, {
  session: new SessionApi(""),
  serverBase,
});
void app.start();
