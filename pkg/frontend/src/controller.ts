/** Session flow: one pending batch, one screen, one in-flight submission.
 *
 * The controller mirrors the server's state machine. It holds the current
 * screen state, applies card operations through the pure tray models, and
 * talks to the service through ApiClient. While a submission is in flight
 * every input is refused (busy flag); on success the next batch is fetched
 * immediately; on rejection the answer the operator built is restored
 * untouched, and a conflict additionally re-fetches the batch because the
 * server has visibly moved on.
 */

import { ApiError } from "./api.js";
import type {
  ApiClient,
  Batch,
  SelectionReceipt,
  SessionEvent,
  SessionStatus,
} from "./api.js";
import { shuffled } from "./shuffle.js";
import {
  canSubmitPick,
  createPick,
  createTray,
  moveEarlier,
  moveLater,
  pickCard,
  rankCard,
  rankingSubmission,
  unrankCard,
} from "./tray.js";
import type { PickState, TrayState } from "./tray.js";

export interface TimelineEntry {
  round: number;
  moved: boolean;
  message: string;
}

export type ScreenState =
  | { kind: "loading"; message: string }
  | {
      kind: "rank";
      status: SessionStatus;
      batch: Batch;
      order: string[];
      tray: TrayState;
      busy: boolean;
      notice: string | null;
    }
  | {
      kind: "select";
      status: SessionStatus;
      batch: Batch;
      order: string[];
      pick: PickState;
      busy: boolean;
      notice: string | null;
    }
  | { kind: "terminated"; status: SessionStatus; timeline: TimelineEntry[] }
  | { kind: "failed"; message: string };

export interface ControllerDeps {
  /** Fresh seed per displayed batch; injected so tests can pin the deal. */
  shuffleSeed(): number;
  render(screen: ScreenState): void;
}

export class SessionController {
  private current: ScreenState = { kind: "loading", message: "connecting" };

  constructor(
    private readonly api: ApiClient,
    readonly sessionId: string,
    private readonly deps: ControllerDeps,
  ) {}

  get screen(): ScreenState {
    return this.current;
  }

  async start(): Promise<void> {
    await this.refresh(null);
  }

  rank(id: string): void {
    if (this.current.kind === "rank" && !this.current.busy) {
      this.show({ ...this.current, tray: rankCard(this.current.tray, id) });
    }
  }

  unrank(id: string): void {
    if (this.current.kind === "rank" && !this.current.busy) {
      this.show({ ...this.current, tray: unrankCard(this.current.tray, id) });
    }
  }

  promote(id: string): void {
    if (this.current.kind === "rank" && !this.current.busy) {
      this.show({ ...this.current, tray: moveEarlier(this.current.tray, id) });
    }
  }

  demote(id: string): void {
    if (this.current.kind === "rank" && !this.current.busy) {
      this.show({ ...this.current, tray: moveLater(this.current.tray, id) });
    }
  }

  pick(id: string): void {
    if (this.current.kind === "select" && !this.current.busy) {
      this.show({ ...this.current, pick: pickCard(this.current.pick, id) });
    }
  }

  async submit(): Promise<void> {
    if (this.current.kind === "rank") {
      await this.submitRanking(this.current);
    } else if (this.current.kind === "select") {
      await this.submitSelection(this.current);
    }
  }

  async terminate(): Promise<void> {
    try {
      await this.api.terminate(this.sessionId);
      const status = await this.api.status(this.sessionId);
      const history = await this.api.history(this.sessionId);
      this.show({ kind: "terminated", status, timeline: timelineOf(history.events) });
    } catch (failure) {
      this.show({ kind: "failed", message: describe(failure) });
    }
  }

  private async submitRanking(screen: Extract<ScreenState, { kind: "rank" }>): Promise<void> {
    if (screen.busy) {
      return;
    }
    const ranking = rankingSubmission(screen.tray);
    if (ranking.length === 0) {
      this.show({ ...screen, notice: "rank at least one card before submitting" });
      return;
    }
    this.show({ ...screen, busy: true, notice: null });
    try {
      await this.api.submitRanking(this.sessionId, screen.batch.batch_id, ranking);
      await this.refresh(null);
    } catch (failure) {
      await this.rollback(screen, failure);
    }
  }

  private async submitSelection(
    screen: Extract<ScreenState, { kind: "select" }>,
  ): Promise<void> {
    if (screen.busy || !canSubmitPick(screen.pick)) {
      return;
    }
    this.show({ ...screen, busy: true, notice: null });
    try {
      await this.api.submitSelection(
        this.sessionId,
        screen.batch.batch_id,
        this.pickOf(screen),
      );
      await this.refresh(null);
    } catch (failure) {
      await this.rollback(screen, failure);
    }
  }

  private pickOf(screen: Extract<ScreenState, { kind: "select" }>): string {
    const selected = screen.pick.selected;
    if (selected === null) {
      throw new Error("submit guarded by canSubmitPick");
    }
    return selected;
  }

  /** Restore the operator's answer after a rejected submission. */
  private async rollback(
    screen: Extract<ScreenState, { kind: "rank" | "select" }>,
    failure: unknown,
  ): Promise<void> {
    if (failure instanceof ApiError && failure.status === 409) {
      // The server is past this batch (stale id, replayed duplicate, or a
      // terminated session); the only honest view is a fresh one.
      await this.refresh(failure.message);
    } else {
      this.show({ ...screen, busy: false, notice: describe(failure) });
    }
  }

  private async refresh(notice: string | null): Promise<void> {
    try {
      const status = await this.api.status(this.sessionId);
      if (status.terminated) {
        const history = await this.api.history(this.sessionId);
        this.show({ kind: "terminated", status, timeline: timelineOf(history.events) });
        return;
      }
      const batch = await this.api.batch(this.sessionId);
      const ids = batch.candidates.map((candidate) => candidate.candidate_id);
      const order = shuffled(ids, this.deps.shuffleSeed());
      if (batch.phase === "rank") {
        this.show({
          kind: "rank",
          status,
          batch,
          order,
          tray: createTray(order),
          busy: false,
          notice,
        });
      } else {
        this.show({
          kind: "select",
          status,
          batch,
          order,
          pick: createPick(order),
          busy: false,
          notice,
        });
      }
    } catch (failure) {
      this.show({ kind: "failed", message: describe(failure) });
    }
  }

  private show(screen: ScreenState): void {
    this.current = screen;
    this.deps.render(screen);
  }
}

export function timelineOf(events: SessionEvent[]): TimelineEntry[] {
  const entries: TimelineEntry[] = [];
  for (const event of events) {
    if (event.event !== "selection_submitted") {
      continue;
    }
    const receipt = event.response as SelectionReceipt | undefined;
    if (receipt === undefined) {
      continue;
    }
    entries.push({
      round: receipt.rounds_completed,
      moved: receipt.moved,
      message: receipt.message,
    });
  }
  return entries;
}

function describe(failure: unknown): string {
  if (failure instanceof ApiError) {
    return failure.message;
  }
  if (failure instanceof Error) {
    return `connection trouble: ${failure.message}`;
  }
  return String(failure);
}
