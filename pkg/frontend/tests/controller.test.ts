import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import type { ScreenState } from "../src/controller.js";
import { shuffled } from "../src/shuffle.js";
import { StubServer } from "./stub.js";

function harness(options?: { numDirections?: number; seed?: number }) {
  const server = new StubServer(options?.numDirections ?? 6);
  const api = new ApiClient("", server.fetch, () => Promise.resolve());
  const frames: ScreenState[] = [];
  const controller = new SessionController(api, server.sessionId, {
    shuffleSeed: () => options?.seed ?? 1,
    render: (screen) => frames.push(screen),
  });
  return { server, controller, frames };
}

function rankScreen(controller: SessionController) {
  const screen = controller.screen;
  if (screen.kind !== "rank") {
    throw new Error(`expected the rank screen, got ${screen.kind}`);
  }
  return screen;
}

function selectScreen(controller: SessionController) {
  const screen = controller.screen;
  if (screen.kind !== "select") {
    throw new Error(`expected the select screen, got ${screen.kind}`);
  }
  return screen;
}

describe("rank screen contract", () => {
  for (const k of [1, 3, 6]) {
    it(`posts exactly the operator's order for k = ${k}`, async () => {
      const { server, controller } = harness();
      await controller.start();
      const screen = rankScreen(controller);

      // The operator works through the displayed cards back to front, a
      // deliberate mismatch with both display order and server order.
      const chosen = [...screen.order].reverse().slice(0, k);
      for (const id of chosen) {
        controller.rank(id);
      }
      await controller.submit();

      expect(server.rankings).toHaveLength(1);
      expect(server.rankings[0]?.batch_id).toBe("b0001");
      expect(server.rankings[0]?.ranking).toEqual(chosen);
    });
  }

  it("keeps ids intact end to end: posted ids are the server's own strings", async () => {
    const { server, controller } = harness();
    await controller.start();
    const screen = rankScreen(controller);
    const issued = server.issued[0] as string[];

    expect([...screen.order].sort()).toEqual([...issued].sort());
    for (const id of screen.order.slice(0, 4)) {
      controller.rank(id);
    }
    await controller.submit();
    const posted = server.rankings[0]?.ranking as string[];
    for (const id of posted) {
      expect(issued).toContain(id);
    }
  });

  it("shuffles the display so position does not leak server order", async () => {
    const ids = ["x1", "x2", "x3", "x4", "x5", "x6"];
    let scrambling = 1;
    while (shuffled(ids, scrambling).join() === ids.join()) {
      scrambling += 1;
    }
    const { server, controller } = harness({ seed: scrambling });
    await controller.start();
    const screen = rankScreen(controller);
    const issued = server.issued[0] as string[];

    expect(screen.order).not.toEqual(issued);
    expect([...screen.order].sort()).toEqual([...issued].sort());

    // Submitting display order must still post the operator's view of it.
    for (const id of screen.order) {
      controller.rank(id);
    }
    await controller.submit();
    expect(server.rankings[0]?.ranking).toEqual(screen.order);
  });

  it("refuses an empty ranking without calling the server", async () => {
    const { server, controller } = harness();
    await controller.start();
    await controller.submit();
    expect(server.rankings).toHaveLength(0);
    expect(rankScreen(controller).notice).toMatch(/rank at least one/);
  });
});

describe("select screen contract", () => {
  async function toSelect(controller: SessionController) {
    await controller.start();
    controller.rank(rankScreen(controller).order[0] as string);
    await controller.submit();
    return selectScreen(controller);
  }

  it("posts a single id, exactly the picked card", async () => {
    const { server, controller } = harness();
    const screen = await toSelect(controller);
    expect(screen.batch.phase).toBe("select");
    expect(screen.order).toHaveLength(7);

    const choice = screen.order[3] as string;
    controller.pick(choice);
    await controller.submit();

    expect(server.selections).toHaveLength(1);
    expect(server.selections[0]).toEqual({ batch_id: "b0002", selection: choice });
    expect(rankScreen(controller).batch.batch_id).toBe("b0003");
  });

  it("does not submit before a card is picked", async () => {
    const { server, controller } = harness();
    await toSelect(controller);
    await controller.submit();
    expect(server.selections).toHaveLength(0);
  });
});

describe("submission lifecycle", () => {
  it("locks input while a submission is in flight", async () => {
    const server = new StubServer();
    let release: (() => void) | undefined;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    // POSTs stall until the test releases them; reads pass through.
    const gatedApi = new ApiClient("", async (input, init) => {
      if (init?.method === "POST") {
        await gate;
      }
      return server.fetch(input, init);
    });
    const controller = new SessionController(gatedApi, server.sessionId, {
      shuffleSeed: () => 1,
      render: () => {},
    });
    await controller.start();
    const first = rankScreen(controller).order[0] as string;
    controller.rank(first);
    const submitted = controller.submit();

    expect(rankScreen(controller).busy).toBe(true);
    controller.rank(rankScreen(controller).order[1] as string);
    expect(rankScreen(controller).tray.ranked).toEqual([first]);

    (release as () => void)();
    await submitted;
    expect(controller.screen.kind).toBe("select");
  });

  it("fetches the next batch immediately after a completed submission", async () => {
    const { server, controller } = harness();
    await controller.start();
    const fetchesBefore = server.batchFetches;
    controller.rank(rankScreen(controller).order[0] as string);
    await controller.submit();
    expect(server.batchFetches).toBe(fetchesBefore + 1);
    expect(controller.screen.kind).toBe("select");
  });

  it("rolls the answer back untouched when the server rejects it", async () => {
    const { server, controller } = harness();
    await controller.start();
    const chosen = rankScreen(controller).order.slice(0, 3);
    for (const id of chosen) {
      controller.rank(id);
    }
    server.planFailure(422, "ranking repeats a candidate");
    await controller.submit();

    const screen = rankScreen(controller);
    expect(screen.busy).toBe(false);
    expect(screen.notice).toBe("ranking repeats a candidate");
    expect(screen.tray.ranked).toEqual(chosen);
    expect(screen.batch.batch_id).toBe("b0001");
  });

  it("re-fetches the batch when the server says the batch is stale", async () => {
    const { server, controller } = harness();
    await controller.start();
    controller.rank(rankScreen(controller).order[0] as string);
    const fetchesBefore = server.batchFetches;
    server.planFailure(409, "b0001 is not the pending batch");
    await controller.submit();

    const screen = rankScreen(controller);
    expect(server.batchFetches).toBe(fetchesBefore + 1);
    expect(screen.notice).toBe("b0001 is not the pending batch");
    expect(screen.tray.ranked).toEqual([]);
  });

  it("keeps the answer and reports connection trouble when the post never lands", async () => {
    const { server, controller } = harness();
    await controller.start();
    const chosen = rankScreen(controller).order[0] as string;
    controller.rank(chosen);
    server.planNetworkFailures(4);
    await controller.submit();

    const screen = rankScreen(controller);
    expect(screen.busy).toBe(false);
    expect(screen.notice).toMatch(/connection trouble/);
    expect(screen.tray.ranked).toEqual([chosen]);
  });

  it("shows the failure screen when the session cannot be loaded at all", async () => {
    const { server, controller } = harness();
    server.planNetworkFailures(8);
    await controller.start();
    const screen = controller.screen;
    expect(screen.kind).toBe("failed");
    if (screen.kind === "failed") {
      expect(screen.message).toMatch(/connection trouble/);
    }
  });
});

describe("session end", () => {
  it("terminating shows the timeline of accepted and refused moves", async () => {
    const { server, controller } = harness();
    await controller.start();

    // Round 1: move (pick a non-anchor card). Round 2: stay (pick the anchor).
    controller.rank(rankScreen(controller).order[0] as string);
    await controller.submit();
    controller.pick(selectScreen(controller).batch.candidates[2]?.candidate_id as string);
    await controller.submit();
    controller.rank(rankScreen(controller).order[0] as string);
    await controller.submit();
    controller.pick(selectScreen(controller).batch.candidates[0]?.candidate_id as string);
    await controller.submit();

    await controller.terminate();
    const screen = controller.screen;
    expect(screen.kind).toBe("terminated");
    if (screen.kind === "terminated") {
      expect(screen.timeline).toEqual([
        { round: 1, moved: true, message: "moved to the selected candidate" },
        { round: 2, moved: false, message: "no move" },
      ]);
      expect(screen.status.moves_accepted).toBe(1);
      expect(screen.status.rounds_completed).toBe(2);
    }
  });
});
