/** The view model: a mirror of the server state plus local UI state.
 *
 * Every view renders as a pure function of this state. All mutations flow
 * through the gateway; the only local-only data are the selection, the event
 * ring buffer, and in-flight optimistic node positions (reconciled on the next
 * scenario_changed broadcast).
 */

import type {
  BakingReport,
  Notification,
  RegistryEntry,
  RunEvent,
  Scenario,
  StateSnapshot,
} from "./protocol";
import type { ClientStatus } from "./client";

export const EVENT_LOG_LIMIT = 500;

export type Selection =
  | { kind: "tessera"; id: string }
  | { kind: "connection"; id: string }
  | null;

export interface ViewState {
  status: ClientStatus;
  registry: RegistryEntry[];
  scenario: Scenario | null;
  baking: BakingReport | null;
  runStatus: "idle" | "running" | "stopping";
  events: RunEvent[];
  lastProgress: { time: number; end_time: number } | null;
  selection: Selection;
  detailsTab: "element" | "run";
  seq: number;
}

type Listener = (state: ViewState) => void;

export class Store {
  state: ViewState = {
    status: "closed",
    registry: [],
    scenario: null,
    baking: null,
    runStatus: "idle",
    events: [],
    lastProgress: null,
    selection: null,
    detailsTab: "element",
    seq: -1,
  };

  private listeners = new Set<Listener>();

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private update(changes: Partial<ViewState>): void {
    this.state = { ...this.state, ...changes };
    this.emit();
  }

  /** Apply a server notification; frames older than the last seen seq are stale. */
  apply(frame: Notification): void {
    if (frame.seq < this.state.seq) return;
    const changes: Partial<ViewState> = { seq: frame.seq };
    switch (frame.notify) {
      case "registry":
        changes.registry = frame.payload as RegistryEntry[];
        break;
      case "scenario_changed": {
        const scenario = frame.payload as Scenario;
        changes.scenario = scenario;
        changes.selection = this.pruneSelection(scenario);
        break;
      }
      case "baking_state":
        changes.baking = frame.payload as BakingReport;
        break;
      case "run_event": {
        const event = frame.payload as RunEvent;
        const events = [...this.state.events, event];
        if (events.length > EVENT_LOG_LIMIT) events.splice(0, events.length - EVENT_LOG_LIMIT);
        changes.events = events;
        if (event.event === "progress") {
          changes.lastProgress = { time: event.time, end_time: event.end_time };
        }
        if (event.event === "done" || event.event === "error") {
          changes.runStatus = "idle";
        }
        break;
      }
    }
    this.update(changes);
  }

  private pruneSelection(scenario: Scenario): Selection {
    const selection = this.state.selection;
    if (!selection) return null;
    if (selection.kind === "tessera" && scenario.tesserae.some((t) => t.id === selection.id)) {
      return selection;
    }
    if (selection.kind === "connection" && scenario.connections.some((c) => c.id === selection.id)) {
      return selection;
    }
    return null;
  }

  ingestSnapshot(snapshot: StateSnapshot): void {
    this.update({
      scenario: snapshot.scenario,
      baking: snapshot.baking,
      runStatus: snapshot.run_status,
    });
  }

  setStatus(status: ClientStatus): void {
    this.update({ status });
  }

  select(selection: Selection): void {
    this.update({ selection, detailsTab: "element" });
  }

  showRunTab(): void {
    this.update({ detailsTab: "run" });
  }

  showElementTab(): void {
    this.update({ detailsTab: "element" });
  }

  markRunStarted(endTime: number): void {
    this.update({
      runStatus: "running",
      events: [],
      lastProgress: { time: 0, end_time: endTime },
      detailsTab: "run",
    });
  }

  markStopping(): void {
    this.update({ runStatus: "stopping" });
  }

  /** Optimistic node position while dragging; the server echo reconciles it. */
  nudgePosition(tesseraId: string, x: number, y: number): void {
    if (!this.state.scenario) return;
    const scenario = {
      ...this.state.scenario,
      layout: { ...this.state.scenario.layout, [tesseraId]: { x, y } },
    };
    this.update({ scenario });
  }

  // -- derived helpers used by several views

  elementState(qualified: string): "ok" | "failed" | "blocked" | "unknown" {
    const entry = this.state.baking?.elements.find((e) => e.element === qualified);
    return entry ? entry.state : "unknown";
  }

  tesseraEntityCount(id: string): number | null {
    const entry = this.state.baking?.tesserae.find((t) => t.id === id);
    if (!entry || entry.entities === null) return null;
    return entry.entities.length;
  }

  problemFor(qualified: string): string | null {
    const problem = this.state.baking?.problems.find((p) => p.element === qualified);
    if (problem) return `${problem.phase}: ${problem.message}`;
    const entry = this.state.baking?.elements.find((e) => e.element === qualified);
    if (entry?.state === "blocked") return `blocked on ${entry.blocked_on}`;
    return null;
  }
}
