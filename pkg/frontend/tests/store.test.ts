import { describe, expect, it } from "vitest";

import { EVENT_LOG_LIMIT, Store } from "../src/store";
import { emptyScenario } from "../src/protocol";
import type { BakingReport, Notification, Scenario } from "../src/protocol";

function scenarioWith(tesseraIds: string[]): Scenario {
  const scenario = emptyScenario();
  scenario.tesserae = tesseraIds.map((id) => ({
    id,
    name: id,
    icon: "",
    simulator_id: "s",
    model: "M",
    sources: [],
  }));
  return scenario;
}

function note(notify: Notification["notify"], seq: number, payload: unknown): Notification {
  return { notify, seq, payload };
}

describe("store notifications", () => {
  it("mirrors scenario and baking payloads", () => {
    const store = new Store();
    store.apply(note("scenario_changed", 1, scenarioWith(["a"])));
    store.apply(note("baking_state", 2, { elements: [], simulators: [], tesserae: [], connections: [], problems: [], validation: [] }));
    expect(store.state.scenario?.tesserae[0].id).toBe("a");
    expect(store.state.baking?.problems).toEqual([]);
    expect(store.state.seq).toBe(2);
  });

  it("drops frames older than the last applied seq", () => {
    const store = new Store();
    store.apply(note("scenario_changed", 5, scenarioWith(["new"])));
    store.apply(note("scenario_changed", 3, scenarioWith(["stale"])));
    expect(store.state.scenario?.tesserae[0].id).toBe("new");
  });

  it("accepts equal-seq frames (the on-connect snapshot shares one seq)", () => {
    const store = new Store();
    store.apply(note("registry", 4, []));
    store.apply(note("scenario_changed", 4, scenarioWith(["a"])));
    expect(store.state.scenario).not.toBeNull();
  });

  it("bounds the event log at the ring size", () => {
    const store = new Store();
    for (let i = 0; i < EVENT_LOG_LIMIT + 120; i++) {
      store.apply(note("run_event", i + 1, { event: "progress", time: i, end_time: 9999 }));
    }
    expect(store.state.events.length).toBe(EVENT_LOG_LIMIT);
    const last = store.state.events[store.state.events.length - 1];
    expect(last).toEqual({ event: "progress", time: EVENT_LOG_LIMIT + 119, end_time: 9999 });
    expect(store.state.lastProgress?.time).toBe(EVENT_LOG_LIMIT + 119);
  });

  it("flips run status to idle on terminal events", () => {
    const store = new Store();
    store.markRunStarted(180);
    expect(store.state.runStatus).toBe("running");
    expect(store.state.detailsTab).toBe("run");
    store.apply(note("run_event", 1, { event: "done", final_time: 180 }));
    expect(store.state.runStatus).toBe("idle");
  });

  it("clears the event log when a run starts", () => {
    const store = new Store();
    store.apply(note("run_event", 1, { event: "log", level: "warning", source: "kernel", message: "x" }));
    store.markRunStarted(60);
    expect(store.state.events).toEqual([]);
  });

  it("prunes the selection when the element disappears", () => {
    const store = new Store();
    store.apply(note("scenario_changed", 1, scenarioWith(["a", "b"])));
    store.select({ kind: "tessera", id: "b" });
    store.apply(note("scenario_changed", 2, scenarioWith(["a"])));
    expect(store.state.selection).toBeNull();
    store.select({ kind: "tessera", id: "a" });
    store.apply(note("scenario_changed", 3, scenarioWith(["a"])));
    expect(store.state.selection).toEqual({ kind: "tessera", id: "a" });
  });

  it("reports element states and problems from the baking report", () => {
    const store = new Store();
    const report: BakingReport = {
      elements: [
        { element: "tessera:a", state: "failed" },
        { element: "tessera:b", state: "blocked", blocked_on: "tessera:a" },
      ],
      simulators: [],
      tesserae: [{ id: "a", entities: null }, { id: "b", entities: null }],
      connections: [],
      problems: [{ element: "tessera:a", phase: "resolve_source", code: "bad_params",
                   message: "boom", blocked_dependents: ["tessera:b"] }],
      validation: [],
    };
    store.apply(note("baking_state", 1, report));
    expect(store.elementState("tessera:a")).toBe("failed");
    expect(store.problemFor("tessera:a")).toContain("boom");
    expect(store.problemFor("tessera:b")).toContain("blocked on tessera:a");
    expect(store.tesseraEntityCount("a")).toBeNull();
  });

  it("applies optimistic positions locally", () => {
    const store = new Store();
    store.apply(note("scenario_changed", 1, scenarioWith(["a"])));
    store.nudgePosition("a", 33, 44);
    expect(store.state.scenario?.layout["a"]).toEqual({ x: 33, y: 44 });
  });
});
