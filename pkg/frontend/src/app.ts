/** Composition root: wires the gateway client, the store, and the four views. */

import { GatewayClient, GatewayError } from "./client";
import { Store } from "./store";
import { Sidebar } from "./sidebar";
import { Canvas } from "./canvas";
import { Details } from "./details";
import { ControlBar } from "./controlbar";
import type { Actions, ConnectionChanges, TesseraChanges } from "./actions";
import type { Notification, ScenarioParams, StateSnapshot } from "./protocol";
import type { Point } from "./hex";

function gatewayUrl(): string {
  const override = new URLSearchParams(window.location.search).get("gateway");
  if (override) return override;
  return `ws://${window.location.hostname || "localhost"}:8701`;
}

export function startApp(document: Document): void {
  const store = new Store();
  const client = new GatewayClient(gatewayUrl(), (url) => new WebSocket(url));

  const controlBar = new ControlBar(byId("control-bar"), store, actions());
  const sidebar = new Sidebar(byId("sidebar"), store, actions());
  const canvas = new Canvas(byId("canvas"), store, actions());
  const details = new Details(byId("details"), store, actions());

  function byId(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  }

  function guarded<A extends unknown[]>(fn: (...args: A) => Promise<unknown>) {
    return async (...args: A): Promise<void> => {
      try {
        await fn(...args);
      } catch (err) {
        controlBar.showError(err instanceof GatewayError ? `${err.code}: ${err.message}` : String(err));
      }
    };
  }

  // Edits never reach the gateway while a run is active; only stop_run and
  // reads may be invoked then.
  function edit<A extends unknown[]>(fn: (...args: A) => Promise<unknown>) {
    const wrapped = guarded(fn);
    return async (...args: A): Promise<void> => {
      if (store.state.runStatus !== "idle") {
        controlBar.showError("run in progress: edits are locked");
        return;
      }
      await wrapped(...args);
    };
  }

  function actions(): Actions {
    return {
      addSimulator: edit((registryKey: string) =>
        client.call("add_simulator", { registry_key: registryKey })),
      updateSimulator: edit((id: string, changes: Record<string, unknown>) =>
        client.call("update_simulator", { id, ...changes })),
      removeSimulator: edit((id: string) => client.call("remove_simulator", { id })),
      addTessera: edit(async (simulatorId: string, model: string, position: Point) => {
        const result = await client.call("add_tessera", {
          simulator_id: simulatorId,
          model,
          name: model,
          position: { x: position.x, y: position.y },
        });
        store.select({ kind: "tessera", id: String(result.id) });
      }),
      updateTessera: edit((id: string, changes: TesseraChanges) =>
        client.call("update_tessera", { id, ...changes })),
      removeTessera: edit(async (id: string) => {
        await client.call("remove_tessera", { id });
        store.select(null);
      }),
      addConnection: edit(async (source: string, target: string) => {
        const result = await client.call("add_connection", { source, target });
        store.select({ kind: "connection", id: String(result.id) });
      }),
      updateConnection: edit((id: string, changes: ConnectionChanges) =>
        client.call("update_connection", { id, ...changes })),
      removeConnection: edit(async (id: string) => {
        await client.call("remove_connection", { id });
        store.select(null);
      }),
      setPosition: edit((id: string, x: number, y: number) =>
        client.call("set_position", { id, x, y })),
      setParams: edit((changes: Partial<ScenarioParams>) =>
        client.call("set_scenario_params", { ...changes })),
      saveScenario: guarded((path?: string) =>
        client.call("save_scenario", path ? { path } : {})),
      loadScenario: edit((path: string) => client.call("load_scenario", { path })),
      startRun: edit(async () => {
        await client.call("start_run", {});
        const end = store.state.scenario?.params.end_time ?? 0;
        store.markRunStarted(end);
      }),
      stopRun: guarded(async () => {
        await client.call("stop_run", {});
        store.markStopping();
      }),
    };
  }

  client.onStatus = (status) => store.setStatus(status);
  client.onNotification = (frame: Notification) => store.apply(frame);

  store.subscribe((state) => {
    byId("canvas").classList.toggle("offline", state.status !== "open");
    sidebar.render(state);
    canvas.render(state);
    details.render(state);
    controlBar.render(state);
  });

  void client
    .connect()
    .then(async () => {
      const snapshot = (await client.call("get_state")) as unknown as StateSnapshot;
      store.ingestSnapshot(snapshot);
    })
    .catch((err) => controlBar.showError(String(err)));
}

if (typeof window !== "undefined" && document.getElementById("canvas")) {
  startApp(document);
}
