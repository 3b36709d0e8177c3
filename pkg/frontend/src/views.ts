/** DOM rendering for the screens the controller produces.
 *
 * Deliberately logic-free: every decision about what an interaction means
 * lives in the controller and the pure models; this file turns a
 * ScreenState into elements and routes DOM events back as controller
 * calls. Rebuilt wholesale on every state change; the screens are small
 * enough that diffing would be ceremony.
 */

import type { Candidate, Payload } from "./api.js";
import type { ScreenState, SessionController } from "./controller.js";
import { keyToAction } from "./keyboard.js";
import { unrankedCards } from "./tray.js";

export function renderScreen(
  root: HTMLElement,
  screen: ScreenState,
  controller: SessionController,
  exportUrl: string,
): void {
  root.textContent = "";
  switch (screen.kind) {
    case "loading":
      root.append(el("p", "status-line", screen.message));
      return;
    case "failed":
      root.append(el("p", "error-line", screen.message));
      return;
    case "terminated":
      renderTerminated(root, screen, exportUrl);
      return;
    case "rank":
      renderRank(root, screen, controller);
      return;
    case "select":
      renderSelect(root, screen, controller);
      return;
  }
}

type RankScreen = Extract<ScreenState, { kind: "rank" }>;
type SelectScreen = Extract<ScreenState, { kind: "select" }>;
type DoneScreen = Extract<ScreenState, { kind: "terminated" }>;

function renderRank(root: HTMLElement, screen: RankScreen, controller: SessionController): void {
  root.append(statusBar(screen.status, screen.notice));
  root.append(el("p", "instruction", screen.batch.instruction));

  const byId = candidateIndex(screen.batch.candidates);
  const pool = zone("cards", "Candidates");
  for (const id of unrankedCards(screen.tray)) {
    pool.list.append(
      card(byId, id, screen.busy, controller, () => controller.rank(id)),
    );
  }
  allowDrop(pool.list, (id) => controller.unrank(id));

  const tray = zone("tray", "Your ranking, best first");
  screen.tray.ranked.forEach((id, position) => {
    const entry = card(byId, id, screen.busy, controller, () => controller.unrank(id));
    entry.prepend(el("span", "rank-badge", String(position + 1)));
    entry.append(
      smallButton("up", screen.busy, () => controller.promote(id)),
      smallButton("down", screen.busy, () => controller.demote(id)),
    );
    tray.list.append(entry);
  });
  allowDrop(tray.list, (id) => controller.rank(id));

  root.append(pool.section, tray.section);
  root.append(
    actionRow(controller, screen.busy || screen.tray.ranked.length === 0, "Submit ranking"),
  );
  wireKeyboard(root, "rank", controller);
}

function renderSelect(
  root: HTMLElement,
  screen: SelectScreen,
  controller: SessionController,
): void {
  root.append(statusBar(screen.status, screen.notice));
  root.append(el("p", "instruction", screen.batch.instruction));

  const byId = candidateIndex(screen.batch.candidates);
  const pool = zone("cards", "Pick the best");
  for (const id of screen.pick.display) {
    const entry = card(byId, id, screen.busy, controller, () => controller.pick(id));
    if (screen.pick.selected === id) {
      entry.classList.add("selected");
    }
    pool.list.append(entry);
  }
  root.append(pool.section);
  root.append(
    actionRow(controller, screen.busy || screen.pick.selected === null, "Submit pick"),
  );
  wireKeyboard(root, "select", controller);
}

function renderTerminated(root: HTMLElement, screen: DoneScreen, exportUrl: string): void {
  root.append(statusBar(screen.status, null));
  root.append(el("h2", "", "Session finished"));
  const best = el("figure", "best-so-far");
  best.append(payloadImage(screen.status.best), el("figcaption", "", "final best"));
  root.append(best);

  const timeline = el("ol", "timeline");
  for (const entry of screen.timeline) {
    timeline.append(
      el(
        "li",
        entry.moved ? "moved" : "stayed",
        `round ${entry.round}: ${entry.message}`,
      ),
    );
  }
  root.append(timeline);

  const link = document.createElement("a");
  link.href = exportUrl;
  link.textContent = "download trajectory";
  link.className = "export-link";
  root.append(link);
}

function statusBar(
  status: { rounds_completed: number; moves_accepted: number; dim: number; best: Payload },
  notice: string | null,
): HTMLElement {
  const bar = el("header", "status-bar");
  bar.append(
    el(
      "span",
      "",
      `rounds ${status.rounds_completed} | moves ${status.moves_accepted} | dim ${status.dim}`,
    ),
  );
  const best = el("figure", "best-so-far");
  best.append(payloadImage(status.best), el("figcaption", "", "best so far"));
  bar.append(best);
  if (notice !== null) {
    bar.append(el("p", "error-line", notice));
  }
  return bar;
}

function candidateIndex(candidates: Candidate[]): Map<string, Candidate> {
  return new Map(candidates.map((candidate) => [candidate.candidate_id, candidate]));
}

function card(
  byId: Map<string, Candidate>,
  id: string,
  busy: boolean,
  controller: SessionController,
  activate: () => void,
): HTMLElement {
  const candidate = byId.get(id);
  const entry = el("figure", "card");
  entry.tabIndex = 0;
  entry.dataset["candidateId"] = id;
  entry.draggable = !busy;
  if (candidate !== undefined) {
    entry.append(payloadImage(candidate.payload));
  }
  entry.append(el("figcaption", "", id));
  if (!busy) {
    entry.addEventListener("click", activate);
    entry.addEventListener("dragstart", (event) => {
      event.dataTransfer?.setData("text/plain", id);
    });
  }
  return entry;
}

function payloadImage(payload: Payload): HTMLImageElement {
  const image = document.createElement("img");
  image.src =
    payload.encoding === "base64"
      ? `data:${payload.media_type};base64,${payload.data}`
      : `data:${payload.media_type};charset=utf-8,${encodeURIComponent(payload.data)}`;
  image.alt = "rendered candidate";
  return image;
}

function zone(kind: "cards" | "tray", title: string): { section: HTMLElement; list: HTMLElement } {
  const section = el("section", kind === "tray" ? "tray-zone" : "card-zone");
  section.dataset["zone"] = kind;
  section.append(el("h2", "", title));
  const list = el("div", "card-list");
  section.append(list);
  return { section, list };
}

function allowDrop(list: HTMLElement, accept: (id: string) => void): void {
  list.addEventListener("dragover", (event) => event.preventDefault());
  list.addEventListener("drop", (event) => {
    event.preventDefault();
    const id = event.dataTransfer?.getData("text/plain");
    if (id) {
      accept(id);
    }
  });
}

function actionRow(
  controller: SessionController,
  submitDisabled: boolean,
  submitLabel: string,
): HTMLElement {
  const row = el("div", "actions");
  const submit = document.createElement("button");
  submit.textContent = submitLabel;
  submit.disabled = submitDisabled;
  submit.addEventListener("click", () => void controller.submit());
  const terminate = document.createElement("button");
  terminate.textContent = "End session";
  terminate.className = "danger";
  terminate.addEventListener("click", () => void controller.terminate());
  row.append(submit, terminate);
  return row;
}

function smallButton(label: "up" | "down", disabled: boolean, act: () => void): HTMLElement {
  const button = document.createElement("button");
  button.textContent = label === "up" ? "↑" : "↓";
  button.disabled = disabled;
  button.className = "nudge";
  button.addEventListener("click", (event) => {
    event.stopPropagation();
    act();
  });
  return button;
}

function wireKeyboard(
  root: HTMLElement,
  phase: "rank" | "select",
  controller: SessionController,
): void {
  root.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement | null;
    const entry = target?.closest<HTMLElement>(".card");
    const id = entry?.dataset["candidateId"];
    const zoneName = entry?.closest<HTMLElement>("[data-zone]")?.dataset["zone"];
    const zone = zoneName === "tray" ? "tray" : "cards";
    const action = keyToAction({ phase, zone }, event.key, event.shiftKey);
    if (action.kind === "none") {
      return;
    }
    event.preventDefault();
    switch (action.kind) {
      case "submit":
        void controller.submit();
        return;
      case "focus-next":
        moveFocus(root, entry, +1);
        return;
      case "focus-prev":
        moveFocus(root, entry, -1);
        return;
      case "rank-focused":
        if (id) controller.rank(id);
        return;
      case "unrank-focused":
        if (id) controller.unrank(id);
        return;
      case "move-earlier":
        if (id) controller.promote(id);
        return;
      case "move-later":
        if (id) controller.demote(id);
        return;
      case "pick-focused":
        if (id) controller.pick(id);
        return;
    }
  });
}

function moveFocus(root: HTMLElement, from: HTMLElement | null | undefined, step: number): void {
  const cards = [...root.querySelectorAll<HTMLElement>(".card")];
  if (cards.length === 0) {
    return;
  }
  const at = from ? cards.indexOf(from) : -1;
  const next = cards[(at + step + cards.length) % cards.length];
  next?.focus();
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}
