/** Entry point: join the session named in the URL, or offer to start one.
 *
 * Served by the optimizer service itself (mounted under /app), so API
 * calls are same-origin with no base URL to configure.
 */

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { renderScreen } from "./views.js";

const api = new ApiClient("");
const root = document.getElementById("app");
if (root === null) {
  throw new Error("index.html must provide <main id=\"app\">");
}

const sessionId = new URLSearchParams(window.location.search).get("session");
if (sessionId !== null) {
  attach(sessionId);
} else {
  renderStartForm(root);
}

function attach(id: string): void {
  const controller: SessionController = new SessionController(api, id, {
    shuffleSeed: () => (Date.now() ^ Math.floor(Math.random() * 0xffffffff)) >>> 0,
    render: (screen) => renderScreen(root as HTMLElement, screen, controller, api.exportUrl(id)),
  });
  void controller.start();
}

function renderStartForm(container: HTMLElement): void {
  container.textContent = "";
  const form = document.createElement("form");
  form.className = "start-form";

  const heading = document.createElement("h2");
  heading.textContent = "Start a session";

  const rendererPick = document.createElement("select");
  for (const [value, label] of [
    ["color-swatch:3", "color swatch (3 parameters)"],
    ["fourier-curve:6", "closed curve (6 parameters)"],
  ]) {
    const option = document.createElement("option");
    option.value = value as string;
    option.textContent = label as string;
    rendererPick.append(option);
  }

  const begin = document.createElement("button");
  begin.textContent = "Begin";
  begin.type = "submit";

  form.append(heading, rendererPick, begin);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const [id, dim] = rendererPick.value.split(":");
    void api
      .createSession({ renderer: { id: id as string, dim: Number(dim) } })
      .then((created) => {
        window.location.search = `?session=${created.session_id}`;
      })
      .catch((failure: unknown) => {
        const note = document.createElement("p");
        note.className = "error-line";
        note.textContent = failure instanceof Error ? failure.message : String(failure);
        form.append(note);
      });
  });
  container.append(form);
}
