/** Left sidebar: available simulators (drag onto the canvas to add), the
 * scenario's simulators with their discovered models, and the connection +
 * baking status lights. */

import type { Actions } from "./actions";
import type { Store, ViewState } from "./store";
import { defaultPosition } from "./hex";

const ICON_GLYPHS: Record<string, string> = {
  grid: "▚",      // ▚
  sun: "☀",       // ☀
  sliders: "☰",   // ☰
  database: "⛁",  // ⛁
  box: "▢",       // ▢
};

export function iconGlyph(name: string): string {
  return ICON_GLYPHS[name] ?? "⬡"; // ⬡
}

export class Sidebar {
  constructor(private root: HTMLElement, private store: Store, private actions: Actions) {}

  render(state: ViewState): void {
    const root = this.root;
    root.innerHTML = "";

    const status = document.createElement("div");
    status.className = "status-box";
    const wsDot = state.status === "open" ? "dot ok" : "dot bad";
    const problems = state.baking?.problems.length ?? 0;
    const bakeDot = problems === 0 ? "dot ok" : "dot warn";
    const bakeText = problems === 0 ? "baked" : `${problems} problem${problems === 1 ? "" : "s"}`;
    status.innerHTML =
      `<div><span class="${wsDot}"></span> orbit ${state.status}</div>` +
      `<div data-role="bake-status"><span class="${bakeDot}"></span> ${bakeText}</div>`;
    root.appendChild(status);

    const heading = document.createElement("h2");
    heading.textContent = "Simulators";
    root.appendChild(heading);

    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "Drag onto the canvas to add";
    root.appendChild(hint);

    for (const entry of state.registry) {
      const item = document.createElement("div");
      item.className = "registry-item";
      item.draggable = true;
      item.dataset.registryKey = entry.key;
      item.innerHTML = `<span class="icon">${iconGlyph(entry.icon)}</span> ${entry.display_name}`;
      item.addEventListener("dragstart", (ev) => {
        ev.dataTransfer?.setData("text/registry-key", entry.key);
      });
      item.addEventListener("dblclick", () => void this.actions.addSimulator(entry.key));
      root.appendChild(item);
    }

    if (state.scenario && state.scenario.simulators.length > 0) {
      const used = document.createElement("h2");
      used.textContent = "In scenario";
      root.appendChild(used);
      for (const sim of state.scenario.simulators) {
        root.appendChild(this.renderScenarioSim(state, sim.id, sim.display_name || sim.id));
      }
    }
  }

  private renderScenarioSim(state: ViewState, simId: string, label: string): HTMLElement {
    const box = document.createElement("div");
    box.className = `scenario-sim state-${this.store.elementState(`simulator:${simId}`)}`;
    const title = document.createElement("div");
    title.className = "sim-title";
    title.textContent = label;
    const problem = this.store.problemFor(`simulator:${simId}`);
    if (problem) title.title = problem;
    box.appendChild(title);

    const meta = state.baking?.simulators.find((s) => s.id === simId)?.meta;
    const models = meta ? Object.keys(meta.models) : [];
    const row = document.createElement("div");
    row.className = "model-row";
    for (const model of models) {
      const button = document.createElement("button");
      button.textContent = `+ ${model}`;
      button.title = `new ${model} tessera in ${simId}`;
      button.addEventListener("click", () => {
        const index = state.scenario?.tesserae.length ?? 0;
        void this.actions.addTessera(simId, model, defaultPosition(index));
      });
      row.appendChild(button);
    }
    if (models.length === 0) {
      const note = document.createElement("span");
      note.className = "hint";
      note.textContent = problem ? "unavailable" : "starting…";
      row.appendChild(note);
    }
    const remove = document.createElement("button");
    remove.className = "danger";
    remove.textContent = "×";
    remove.title = "remove simulator";
    remove.addEventListener("click", () => void this.actions.removeSimulator(simId));
    row.appendChild(remove);
    box.appendChild(row);
    return box;
  }
}
